#include "sb/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <unordered_set>

namespace sb::expr {

FieldSignature::FieldSignature(std::vector<std::string> states,
                               std::vector<std::pair<std::string, int>> groups)
    : state_names(std::move(states)), param_groups(std::move(groups)) {
    if (state_names.empty())
        throw std::invalid_argument("signature: state_dim must be >= 1");
    std::unordered_set<std::string> seen(state_names.begin(), state_names.end());
    if (seen.size() != state_names.size())
        throw std::invalid_argument("signature: duplicate state name");
    for (const auto& [name, dim] : param_groups) {
        if (dim < 1)
            throw std::invalid_argument("signature: group '" + name + "' has dim < 1");
        if (!seen.insert(name).second)
            throw std::invalid_argument("signature: duplicate group name '" + name + "'");
    }
}

FieldSignature FieldSignature::make(int state_dim,
                                    std::vector<std::pair<std::string, int>> groups) {
    std::vector<std::string> names;
    names.reserve(state_dim);
    for (int i = 1; i <= state_dim; ++i) names.push_back("x" + std::to_string(i));
    return FieldSignature(std::move(names), std::move(groups));
}

int FieldSignature::param_dim() const {
    int total = 0;
    for (const auto& [name, dim] : param_groups) total += dim;
    return total;
}

int FieldSignature::group_offset(std::string_view name) const {
    int offset = 0;
    for (const auto& [gname, dim] : param_groups) {
        if (gname == name) return offset;
        offset += dim;
    }
    return -1;
}

int FieldSignature::group_dim(std::string_view name) const {
    for (const auto& [gname, dim] : param_groups)
        if (gname == name) return dim;
    return -1;
}

int FieldSignature::resolve(std::string_view ident) const {
    for (int i = 0; i < state_dim(); ++i)
        if (state_names[i] == ident) return i;
    // group name + 1-based index, or bare name for dim-1 groups
    int offset = state_dim();
    for (const auto& [gname, dim] : param_groups) {
        if (dim == 1 && ident == gname) return offset;
        if (ident.size() > gname.size() && ident.substr(0, gname.size()) == gname) {
            std::string_view suffix = ident.substr(gname.size());
            bool digits = !suffix.empty();
            for (char c : suffix) digits = digits && std::isdigit(static_cast<unsigned char>(c));
            if (digits) {
                int idx = std::atoi(std::string(suffix).c_str());
                if (idx >= 1 && idx <= dim) return offset + idx - 1;
            }
        }
        offset += dim;
    }
    return -1;
}

std::string FieldSignature::slot_name(int slot) const {
    if (slot < state_dim()) return state_names[slot];
    int offset = state_dim();
    for (const auto& [gname, dim] : param_groups) {
        if (slot < offset + dim) {
            if (dim == 1) return gname;
            return gname + std::to_string(slot - offset + 1);
        }
        offset += dim;
    }
    return "?";
}

Expr Expr::clone() const {
    Expr out;
    out.kind = kind;
    out.value = value;
    out.slot = slot;
    out.exponent = exponent;
    if (lhs) out.lhs = std::make_unique<Expr>(lhs->clone());
    if (rhs) out.rhs = std::make_unique<Expr>(rhs->clone());
    return out;
}

Expr make_const(double v) {
    Expr e;
    e.kind = NodeKind::Constant;
    e.value = v;
    return e;
}

Expr make_var(int slot) {
    Expr e;
    e.kind = NodeKind::Variable;
    e.slot = slot;
    return e;
}

Expr make_binary(NodeKind kind, Expr a, Expr b) {
    Expr e;
    e.kind = kind;
    e.lhs = std::make_unique<Expr>(std::move(a));
    e.rhs = std::make_unique<Expr>(std::move(b));
    return e;
}

Expr make_unary(NodeKind kind, Expr a) {
    Expr e;
    e.kind = kind;
    e.lhs = std::make_unique<Expr>(std::move(a));
    return e;
}

Expr make_pow(Expr base, int exponent) {
    Expr e;
    e.kind = NodeKind::Pow;
    e.exponent = exponent;
    e.lhs = std::make_unique<Expr>(std::move(base));
    return e;
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NodeKind::Constant:
            return a.value == b.value;
        case NodeKind::Variable:
            return a.slot == b.slot;
        case NodeKind::Pow:
            return a.exponent == b.exponent && structurally_equal(*a.lhs, *b.lhs);
        case NodeKind::Neg:
        case NodeKind::Abs:
            return structurally_equal(*a.lhs, *b.lhs);
        default:
            return structurally_equal(*a.lhs, *b.lhs) &&
                   structurally_equal(*a.rhs, *b.rhs);
    }
}

namespace {

int precedence(NodeKind kind) {
    switch (kind) {
        case NodeKind::Add:
        case NodeKind::Sub: return 1;
        case NodeKind::Mul:
        case NodeKind::Div: return 2;
        case NodeKind::Neg: return 3;
        case NodeKind::Pow: return 4;
        default: return 5;
    }
}

void print_expr(const Expr& e, const FieldSignature& sig, std::string& out,
                int parent_prec) {
    const int prec = precedence(e.kind);
    const bool paren = prec < parent_prec;
    if (paren) out += '(';
    switch (e.kind) {
        case NodeKind::Constant: {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", e.value);
            out += buf;
            break;
        }
        case NodeKind::Variable:
            out += sig.slot_name(e.slot);
            break;
        case NodeKind::Add:
            print_expr(*e.lhs, sig, out, prec);
            out += " + ";
            print_expr(*e.rhs, sig, out, prec);
            break;
        case NodeKind::Sub:
            print_expr(*e.lhs, sig, out, prec);
            out += " - ";
            print_expr(*e.rhs, sig, out, prec + 1);
            break;
        case NodeKind::Mul:
            print_expr(*e.lhs, sig, out, prec);
            out += "*";
            print_expr(*e.rhs, sig, out, prec);
            break;
        case NodeKind::Div:
            print_expr(*e.lhs, sig, out, prec);
            out += "/";
            print_expr(*e.rhs, sig, out, prec + 1);
            break;
        case NodeKind::Neg:
            out += "-";
            print_expr(*e.lhs, sig, out, prec);
            break;
        case NodeKind::Pow:
            print_expr(*e.lhs, sig, out, prec + 1);
            out += "^";
            if (e.exponent < 0) {
                out += "(" + std::to_string(e.exponent) + ")";
            } else {
                out += std::to_string(e.exponent);
            }
            break;
        case NodeKind::Min:
            out += "min(";
            print_expr(*e.lhs, sig, out, 0);
            out += ", ";
            print_expr(*e.rhs, sig, out, 0);
            out += ")";
            break;
        case NodeKind::Max:
            out += "max(";
            print_expr(*e.lhs, sig, out, 0);
            out += ", ";
            print_expr(*e.rhs, sig, out, 0);
            out += ")";
            break;
        case NodeKind::Abs:
            out += "abs(";
            print_expr(*e.lhs, sig, out, 0);
            out += ")";
            break;
    }
    if (paren) out += ')';
}

// --- parser ---------------------------------------------------------------

enum class TokKind { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen,
                     RParen, Comma, End };

struct Token {
    TokKind kind;
    double number = 0.0;
    std::string text;
    std::size_t pos = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
        current_.pos = pos_;
        if (pos_ >= src_.size()) {
            current_.kind = TokKind::End;
            return;
        }
        const char c = src_[pos_];
        switch (c) {
            case '+': current_.kind = TokKind::Plus; ++pos_; return;
            case '-': current_.kind = TokKind::Minus; ++pos_; return;
            case '*': current_.kind = TokKind::Star; ++pos_; return;
            case '/': current_.kind = TokKind::Slash; ++pos_; return;
            case '^': current_.kind = TokKind::Caret; ++pos_; return;
            case '(': current_.kind = TokKind::LParen; ++pos_; return;
            case ')': current_.kind = TokKind::RParen; ++pos_; return;
            case ',': current_.kind = TokKind::Comma; ++pos_; return;
            default: break;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = src_.data() + pos_;
            char* end = nullptr;
            current_.number = std::strtod(begin, &end);
            if (end == begin)
                throw ParseError("malformed number", pos_);
            current_.kind = TokKind::Number;
            pos_ += static_cast<std::size_t>(end - begin);
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            current_.kind = TokKind::Ident;
            current_.text = std::string(src_.substr(start, pos_ - start));
            return;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", pos_);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token current_;
};

class Parser {
public:
    Parser(std::string_view src, const FieldSignature& sig)
        : lexer_(src), sig_(sig) {}

    Expr parse() {
        Expr e = parse_sum();
        const Token& t = lexer_.peek();
        if (t.kind != TokKind::End)
            throw ParseError("unexpected trailing input", t.pos);
        return e;
    }

private:
    Expr parse_sum() {
        Expr e = parse_term();
        for (;;) {
            TokKind k = lexer_.peek().kind;
            if (k == TokKind::Plus) {
                lexer_.take();
                e = make_binary(NodeKind::Add, std::move(e), parse_term());
            } else if (k == TokKind::Minus) {
                lexer_.take();
                e = make_binary(NodeKind::Sub, std::move(e), parse_term());
            } else {
                return e;
            }
        }
    }

    Expr parse_term() {
        Expr e = parse_factor();
        for (;;) {
            TokKind k = lexer_.peek().kind;
            if (k == TokKind::Star) {
                lexer_.take();
                e = make_binary(NodeKind::Mul, std::move(e), parse_factor());
            } else if (k == TokKind::Slash) {
                lexer_.take();
                e = make_binary(NodeKind::Div, std::move(e), parse_factor());
            } else {
                return e;
            }
        }
    }

    // unary minus binds looser than power: -x^2 parses as -(x^2)
    Expr parse_factor() {
        if (lexer_.peek().kind == TokKind::Minus) {
            lexer_.take();
            return make_unary(NodeKind::Neg, parse_factor());
        }
        return parse_power();
    }

    Expr parse_power() {
        Expr base = parse_primary();
        if (lexer_.peek().kind == TokKind::Caret) {
            Token caret = lexer_.take();
            return make_pow(std::move(base), parse_int_exponent(caret.pos));
        }
        return base;
    }

    int parse_int_exponent(std::size_t caret_pos) {
        bool negate = false;
        bool parens = false;
        if (lexer_.peek().kind == TokKind::LParen) {
            parens = true;
            lexer_.take();
        }
        if (lexer_.peek().kind == TokKind::Minus) {
            negate = true;
            lexer_.take();
        }
        Token t = lexer_.peek();
        if (t.kind != TokKind::Number)
            throw ParseError("power requires an integer exponent", caret_pos);
        double v = t.number;
        if (v != std::floor(v))
            throw ParseError("power exponent must be an integer", t.pos);
        lexer_.take();
        if (parens) {
            if (lexer_.peek().kind != TokKind::RParen)
                throw ParseError("expected ')' after exponent", lexer_.peek().pos);
            lexer_.take();
        }
        int e = static_cast<int>(v);
        return negate ? -e : e;
    }

    Expr parse_primary() {
        Token t = lexer_.take();
        switch (t.kind) {
            case TokKind::Number:
                return make_const(t.number);
            case TokKind::LParen: {
                Expr e = parse_sum();
                if (lexer_.peek().kind != TokKind::RParen)
                    throw ParseError("expected ')'", lexer_.peek().pos);
                lexer_.take();
                return e;
            }
            case TokKind::Ident: {
                if (lexer_.peek().kind == TokKind::LParen)
                    return parse_call(t);
                int slot = sig_.resolve(t.text);
                if (slot < 0)
                    throw ParseError("undeclared identifier " + t.text, t.pos);
                return make_var(slot);
            }
            default:
                throw ParseError("expected a value", t.pos);
        }
    }

    Expr parse_call(const Token& name) {
        lexer_.take();  // '('
        if (name.text == "abs") {
            Expr a = parse_sum();
            expect_rparen(name.pos);
            return make_unary(NodeKind::Abs, std::move(a));
        }
        if (name.text == "min" || name.text == "max") {
            Expr a = parse_sum();
            if (lexer_.peek().kind != TokKind::Comma)
                throw ParseError(name.text + " requires two arguments", lexer_.peek().pos);
            lexer_.take();
            Expr b = parse_sum();
            expect_rparen(name.pos);
            return make_binary(name.text == "min" ? NodeKind::Min : NodeKind::Max,
                               std::move(a), std::move(b));
        }
        throw ParseError("unknown function " + name.text, name.pos);
    }

    void expect_rparen(std::size_t call_pos) {
        if (lexer_.peek().kind != TokKind::RParen)
            throw ParseError("expected ')' closing call", call_pos);
        lexer_.take();
    }

    Lexer lexer_;
    const FieldSignature& sig_;
};

}  // namespace

std::string to_string(const Expr& e, const FieldSignature& sig) {
    std::string out;
    print_expr(e, sig, out, 0);
    return out;
}

Expr parse_expr(std::string_view source, const FieldSignature& sig) {
    return Parser(source, sig).parse();
}

// --- compiled evaluation --------------------------------------------------

namespace {

void flatten(const Expr& e, std::vector<const Expr*>& postorder) {
    if (e.lhs) flatten(*e.lhs, postorder);
    if (e.rhs) flatten(*e.rhs, postorder);
    postorder.push_back(&e);
}

double ipow(double base, int exponent) {
    if (exponent == 0) return 1.0;
    const bool invert = exponent < 0;
    unsigned k = invert ? static_cast<unsigned>(-(long long)exponent)
                        : static_cast<unsigned>(exponent);
    double acc = 1.0;
    double b = base;
    while (k) {
        if (k & 1u) acc *= b;
        b *= b;
        k >>= 1;
    }
    if (invert) {
        if (acc == 0.0) throw EvalError("division by zero in negative power");
        return 1.0 / acc;
    }
    return acc;
}

}  // namespace

CompiledExpr::CompiledExpr(const Expr& tree) {
    std::vector<const Expr*> postorder;
    flatten(tree, postorder);
    tape_.reserve(postorder.size());
    int depth = 0, max_depth = 0;
    for (const Expr* node : postorder) {
        tape_.push_back({node->kind, node->value, node->slot, node->exponent});
        switch (node->kind) {
            case NodeKind::Constant:
            case NodeKind::Variable:
                ++depth;
                max_depth = std::max(max_depth, depth);
                break;
            case NodeKind::Neg:
            case NodeKind::Abs:
            case NodeKind::Pow:
                break;  // one in, one out
            default:
                --depth;  // two in, one out
                break;
        }
    }
    stack_depth_ = max_depth;
}

double CompiledExpr::eval(std::span<const double> state,
                          std::span<const double> params) const {
    double stack[64];
    int top = -1;
    const int n = static_cast<int>(state.size());
    for (const Instr& ins : tape_) {
        switch (ins.op) {
            case NodeKind::Constant:
                stack[++top] = ins.value;
                break;
            case NodeKind::Variable:
                stack[++top] = ins.slot < n ? state[ins.slot] : params[ins.slot - n];
                break;
            case NodeKind::Neg:
                stack[top] = -stack[top];
                break;
            case NodeKind::Abs:
                stack[top] = std::fabs(stack[top]);
                break;
            case NodeKind::Pow:
                stack[top] = ipow(stack[top], ins.exponent);
                break;
            case NodeKind::Add:
                stack[top - 1] += stack[top];
                --top;
                break;
            case NodeKind::Sub:
                stack[top - 1] -= stack[top];
                --top;
                break;
            case NodeKind::Mul:
                stack[top - 1] *= stack[top];
                --top;
                break;
            case NodeKind::Div:
                if (stack[top] == 0.0) throw EvalError("division by zero");
                stack[top - 1] /= stack[top];
                --top;
                break;
            case NodeKind::Min:
                stack[top - 1] = std::min(stack[top - 1], stack[top]);
                --top;
                break;
            case NodeKind::Max:
                stack[top - 1] = std::max(stack[top - 1], stack[top]);
                --top;
                break;
        }
    }
    return stack[0];
}

// --- VectorField ----------------------------------------------------------

VectorField::VectorField(FieldSignature sig, std::vector<Expr> components)
    : sig_(std::move(sig)), components_(std::move(components)) {
    if (static_cast<int>(components_.size()) != sig_.state_dim())
        throw std::invalid_argument("vector field: component count must equal state_dim");
    compiled_.reserve(components_.size());
    for (const Expr& c : components_) {
        CompiledExpr ce(c);
        if (ce.stack_depth() > 64)
            throw std::invalid_argument("vector field: expression too deep");
        compiled_.push_back(std::move(ce));
    }
}

void VectorField::eval_into(std::span<const double> state,
                            std::span<const double> params,
                            std::span<double> out) const {
    for (std::size_t i = 0; i < compiled_.size(); ++i) {
        try {
            out[i] = compiled_[i].eval(state, params);
        } catch (const EvalError& err) {
            throw EvalError(std::string(err.what()) + " in component " +
                            std::to_string(i + 1));
        }
    }
}

std::vector<double> VectorField::eval(std::span<const double> state,
                                      std::span<const double> params) const {
    std::vector<double> out(components_.size());
    eval_into(state, params, out);
    return out;
}

VectorField VectorField::clone() const {
    std::vector<Expr> comps;
    comps.reserve(components_.size());
    for (const Expr& c : components_) comps.push_back(c.clone());
    return VectorField(sig_, std::move(comps));
}

VectorField parse_field(const std::vector<std::string>& sources,
                        const FieldSignature& sig) {
    if (static_cast<int>(sources.size()) != sig.state_dim())
        throw std::invalid_argument("parse_field: one expression per state component required");
    std::vector<Expr> comps;
    comps.reserve(sources.size());
    for (const std::string& s : sources) comps.push_back(parse_expr(s, sig));
    return VectorField(sig, std::move(comps));
}

std::vector<double> jacobian_fd(const VectorField& field,
                                std::span<const double> x,
                                std::span<const double> params,
                                double h_rel) {
    const int n = field.state_dim();
    std::vector<double> jac(static_cast<std::size_t>(n) * n);
    std::vector<double> xp(x.begin(), x.end());
    std::vector<double> fp(n), fm(n);
    for (int j = 0; j < n; ++j) {
        const double h = h_rel * std::max(1.0, std::fabs(x[j]));
        const double saved = xp[j];
        xp[j] = saved + h;
        field.eval_into(xp, params, fp);
        xp[j] = saved - h;
        field.eval_into(xp, params, fm);
        xp[j] = saved;
        for (int i = 0; i < n; ++i)
            jac[static_cast<std::size_t>(i) * n + j] = (fp[i] - fm[i]) / (2.0 * h);
    }
    return jac;
}

std::vector<double> lie_bracket(const VectorField& f, const VectorField& g,
                                std::span<const double> x,
                                std::span<const double> params_f,
                                std::span<const double> params_g,
                                double h_rel) {
    if (f.state_dim() != g.state_dim())
        throw std::invalid_argument("lie_bracket: fields must share state_dim");
    const int n = f.state_dim();
    const std::vector<double> fv = f.eval(x, params_f);
    const std::vector<double> gv = g.eval(x, params_g);
    const std::vector<double> df = jacobian_fd(f, x, params_f, h_rel);
    const std::vector<double> dg = jacobian_fd(g, x, params_g, h_rel);
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
            acc += dg[static_cast<std::size_t>(i) * n + j] * fv[j] -
                   df[static_cast<std::size_t>(i) * n + j] * gv[j];
        out[i] = acc;
    }
    return out;
}

}  // namespace sb::expr
