#pragma once

// Arithmetic expression trees for vector field right-hand sides.
// Supported grammar: + - * /, unary minus, integer-exponent power,
// min(a,b), max(a,b), abs(a), numeric literals and declared variables.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sb::expr {

/// Declares the state dimension and the named control parameter groups
/// of a vector field. Variable slots are laid out state-first, then the
/// groups in declaration order.
struct FieldSignature {
    std::vector<std::string> state_names;                    // size n
    std::vector<std::pair<std::string, int>> param_groups;   // (name, dim)

    FieldSignature() = default;
    FieldSignature(std::vector<std::string> states,
                   std::vector<std::pair<std::string, int>> groups);

    /// Convenience: states named x1..xn.
    static FieldSignature make(int state_dim,
                               std::vector<std::pair<std::string, int>> groups);

    int state_dim() const { return static_cast<int>(state_names.size()); }
    int param_dim() const;
    int group_count() const { return static_cast<int>(param_groups.size()); }

    /// Offset of a group inside the flattened parameter vector, -1 if absent.
    int group_offset(std::string_view name) const;
    int group_dim(std::string_view name) const;

    /// Resolve an identifier to a slot: [0,n) state, [n, n+param_dim) params.
    /// Accepts "name" for dim-1 groups and "nameK" (1-based) generally;
    /// state names are matched verbatim. Returns -1 if undeclared.
    int resolve(std::string_view ident) const;

    /// Printable name for a slot (inverse of resolve, canonical form).
    std::string slot_name(int slot) const;

    bool operator==(const FieldSignature&) const = default;
};

enum class NodeKind {
    Constant,
    Variable,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow,
    Min,
    Max,
    Abs,
};

struct Expr {
    NodeKind kind = NodeKind::Constant;
    double value = 0.0;   // Constant
    int slot = -1;        // Variable
    int exponent = 0;     // Pow
    std::unique_ptr<Expr> lhs;
    std::unique_ptr<Expr> rhs;

    Expr clone() const;
};

Expr make_const(double v);
Expr make_var(int slot);
Expr make_binary(NodeKind kind, Expr a, Expr b);
Expr make_unary(NodeKind kind, Expr a);
Expr make_pow(Expr base, int exponent);

bool structurally_equal(const Expr& a, const Expr& b);

/// Canonical text form; parse(to_string(e)) is structurally equal to e.
std::string to_string(const Expr& e, const FieldSignature& sig);

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what), position(position) {}
    std::size_t position;   // 0-based offset into the source text
};

struct EvalError : std::runtime_error {
    explicit EvalError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse a single component expression against a signature.
/// Throws ParseError on malformed syntax or undeclared identifiers.
Expr parse_expr(std::string_view source, const FieldSignature& sig);

/// Flattened postorder program for fast repeated evaluation.
class CompiledExpr {
public:
    CompiledExpr() = default;
    explicit CompiledExpr(const Expr& tree);

    /// state.size() == n, params.size() == param_dim (flattened groups).
    double eval(std::span<const double> state,
                std::span<const double> params) const;

    int stack_depth() const { return stack_depth_; }

private:
    struct Instr {
        NodeKind op;
        double value;
        int slot;
        int exponent;
    };
    std::vector<Instr> tape_;
    int stack_depth_ = 0;
};

/// A parsed, evaluable vector field with n components.
class VectorField {
public:
    VectorField() = default;
    VectorField(FieldSignature sig, std::vector<Expr> components);

    const FieldSignature& signature() const { return sig_; }
    int state_dim() const { return sig_.state_dim(); }
    int param_dim() const { return sig_.param_dim(); }
    const Expr& component(int i) const { return components_[i]; }
    int component_count() const { return static_cast<int>(components_.size()); }

    /// Componentwise evaluation into out (size n). Division by zero is
    /// reported as EvalError naming the offending component.
    void eval_into(std::span<const double> state,
                   std::span<const double> params,
                   std::span<double> out) const;

    std::vector<double> eval(std::span<const double> state,
                             std::span<const double> params) const;

    VectorField clone() const;

private:
    FieldSignature sig_;
    std::vector<Expr> components_;
    std::vector<CompiledExpr> compiled_;
};

/// Parse one expression string per state component.
VectorField parse_field(const std::vector<std::string>& sources,
                        const FieldSignature& sig);

/// Jacobian d(field)/d(state) by central differences with per-coordinate
/// step h_i = h_rel * max(1, |x_i|). Row-major n x n.
std::vector<double> jacobian_fd(const VectorField& field,
                                std::span<const double> x,
                                std::span<const double> params,
                                double h_rel = 1e-6);

/// Lie bracket [F,G](x) = DG(x)*F(x) - DF(x)*G(x).
/// F and G must share the state dimension; each gets its own parameters.
std::vector<double> lie_bracket(const VectorField& f, const VectorField& g,
                                std::span<const double> x,
                                std::span<const double> params_f,
                                std::span<const double> params_g,
                                double h_rel = 1e-6);

}  // namespace sb::expr
