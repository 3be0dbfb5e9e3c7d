#include "sb/gamespec.hpp"

#include <cmath>
#include <set>

namespace sb::game {

namespace {

constexpr double kPointTolerance = 1e-9;

double halton(unsigned index, unsigned base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(index % base);
        index /= base;
    }
    return r;
}

constexpr unsigned kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

std::vector<double> linspace(double lo, double hi, int count) {
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    out.front() = lo;
    out.back() = hi;
    return out;
}

}  // namespace

SetDescriptor SetDescriptor::interval(double lo, double hi, int count) {
    SetDescriptor d;
    d.kind = Kind::Interval;
    d.lo = lo;
    d.hi = hi;
    d.count = count;
    return d;
}

SetDescriptor SetDescriptor::box(std::vector<std::array<double, 2>> axes,
                                 std::vector<int> counts) {
    SetDescriptor d;
    d.kind = Kind::Box;
    d.axes = std::move(axes);
    d.axis_counts = std::move(counts);
    return d;
}

SetDescriptor SetDescriptor::ball(std::vector<double> center, double radius, int count) {
    SetDescriptor d;
    d.kind = Kind::Ball;
    d.center = std::move(center);
    d.radius = radius;
    d.count = count;
    return d;
}

SetDescriptor SetDescriptor::explicit_points(std::vector<std::vector<double>> pts) {
    SetDescriptor d;
    d.kind = Kind::Explicit;
    d.points = std::move(pts);
    return d;
}

SampledControlSet sample_control_set(const SetDescriptor& descriptor) {
    SampledControlSet set;
    set.descriptor = descriptor;
    switch (descriptor.kind) {
        case SetDescriptor::Kind::Interval: {
            if (descriptor.count < 2)
                throw std::invalid_argument("interval descriptor: count must be >= 2");
            if (!(descriptor.hi > descriptor.lo))
                throw std::invalid_argument("interval descriptor: degenerate interval");
            set.dim = 1;
            for (double v : linspace(descriptor.lo, descriptor.hi, descriptor.count))
                set.points.push_back({v});
            break;
        }
        case SetDescriptor::Kind::Box: {
            if (descriptor.axes.empty() ||
                descriptor.axes.size() != descriptor.axis_counts.size())
                throw std::invalid_argument("box descriptor: axes/counts mismatch");
            set.dim = static_cast<int>(descriptor.axes.size());
            std::vector<std::vector<double>> grids;
            for (std::size_t a = 0; a < descriptor.axes.size(); ++a) {
                if (descriptor.axis_counts[a] < 2)
                    throw std::invalid_argument("box descriptor: count must be >= 2");
                grids.push_back(linspace(descriptor.axes[a][0], descriptor.axes[a][1],
                                         descriptor.axis_counts[a]));
            }
            std::vector<int> idx(grids.size(), 0);
            for (;;) {
                std::vector<double> p(grids.size());
                for (std::size_t a = 0; a < grids.size(); ++a) p[a] = grids[a][idx[a]];
                set.points.push_back(std::move(p));
                std::size_t a = grids.size();
                while (a > 0) {
                    --a;
                    if (++idx[a] < static_cast<int>(grids[a].size())) break;
                    idx[a] = 0;
                    if (a == 0) {
                        a = grids.size() + 1;  // done
                        break;
                    }
                }
                if (a == grids.size() + 1) break;
            }
            break;
        }
        case SetDescriptor::Kind::Ball: {
            if (descriptor.count < 1)
                throw std::invalid_argument("ball descriptor: count must be >= 1");
            if (descriptor.radius < 0.0)
                throw std::invalid_argument("ball descriptor: negative radius");
            const int dim = static_cast<int>(descriptor.center.size());
            if (dim < 1) throw std::invalid_argument("ball descriptor: empty center");
            set.dim = dim;
            if (dim == 1) {
                // a 1D ball is an interval
                if (descriptor.count == 1) {
                    set.points.push_back({descriptor.center[0]});
                } else {
                    for (double v : linspace(descriptor.center[0] - descriptor.radius,
                                             descriptor.center[0] + descriptor.radius,
                                             descriptor.count))
                        set.points.push_back({v});
                }
                break;
            }
            if (dim > 8)
                throw std::invalid_argument("ball descriptor: dim > 8 unsupported");
            // center first, then a deterministic low-discrepancy fill (Halton
            // points in the enclosing box, rejected to the ball)
            set.points.push_back(descriptor.center);
            unsigned index = 1;
            while (static_cast<int>(set.points.size()) < descriptor.count) {
                std::vector<double> p(dim);
                double norm2 = 0.0;
                for (int a = 0; a < dim; ++a) {
                    const double t = halton(index, kPrimes[a]);
                    const double offset = descriptor.radius * (2.0 * t - 1.0);
                    p[a] = descriptor.center[a] + offset;
                    norm2 += offset * offset;
                }
                ++index;
                if (norm2 <= descriptor.radius * descriptor.radius)
                    set.points.push_back(std::move(p));
            }
            break;
        }
        case SetDescriptor::Kind::Explicit: {
            if (descriptor.points.empty())
                throw std::invalid_argument("explicit descriptor: no points");
            set.dim = static_cast<int>(descriptor.points.front().size());
            for (const auto& p : descriptor.points) {
                if (static_cast<int>(p.size()) != set.dim)
                    throw std::invalid_argument("explicit descriptor: inconsistent dims");
                set.points.push_back(p);
            }
            break;
        }
    }
    std::set<std::vector<double>> distinct(set.points.begin(), set.points.end());
    if (distinct.size() != set.points.size())
        throw std::invalid_argument("control set sample: duplicate points");
    return set;
}

bool RegionSpec::contains(std::span<const double> x) const {
    switch (kind) {
        case Kind::Point: {
            for (std::size_t i = 0; i < center.size(); ++i)
                if (std::fabs(x[i] - center[i]) > kPointTolerance) return false;
            return true;
        }
        case Kind::Box: {
            for (std::size_t i = 0; i < bounds.size(); ++i)
                if (x[i] < bounds[i][0] || x[i] > bounds[i][1]) return false;
            return true;
        }
        case Kind::Ball: {
            double acc = 0.0;
            for (std::size_t i = 0; i < center.size(); ++i) {
                const double d = x[i] - center[i];
                acc += d * d;
            }
            return acc <= radius * radius;
        }
    }
    return false;
}

int RegionSpec::dim() const {
    return kind == Kind::Box ? static_cast<int>(bounds.size())
                             : static_cast<int>(center.size());
}

void AuxiliarySystem::validate() const {
    const int gdim = g.signature().group_dim(omega_group);
    if (gdim < 0)
        throw std::invalid_argument("auxiliary: g has no group " + omega_group);
    if (gdim != omega.dim)
        throw std::invalid_argument("auxiliary: omega sample dim mismatch");
    if (terminal.dim() != g.state_dim())
        throw std::invalid_argument("auxiliary: terminal set dim mismatch");
}

void GameProblem::validate() const {
    if (horizon <= 0.0)
        throw std::invalid_argument("game problem: horizon must be > 0");
    if (f.signature().group_dim(u_group) != P.dim)
        throw std::invalid_argument("game problem: P dim mismatch");
    if (f.signature().group_dim(v_group) != Q.dim)
        throw std::invalid_argument("game problem: Q dim mismatch");
}

namespace {

// Remap variable slots of an expression copied into a wider signature.
expr::Expr remap(const expr::Expr& e, const std::vector<int>& slot_map) {
    expr::Expr out = e.clone();
    struct Walker {
        const std::vector<int>& map;
        void walk(expr::Expr& node) {
            if (node.kind == expr::NodeKind::Variable) node.slot = map[node.slot];
            if (node.lhs) walk(*node.lhs);
            if (node.rhs) walk(*node.rhs);
        }
    } walker{slot_map};
    walker.walk(out);
    return out;
}

}  // namespace

TransformedProblem build_transformed(const GameProblem& problem,
                                     const AuxiliarySystem& aux) {
    problem.validate();
    aux.validate();
    if (problem.f.state_dim() != aux.g.state_dim())
        throw std::invalid_argument("build_transformed: state_dim mismatch");

    const int n = problem.f.state_dim();
    const int p = problem.P.dim;
    const int q = problem.Q.dim;
    const int r = aux.omega.dim;

    expr::FieldSignature sig(problem.f.signature().state_names,
                             {{"nu", 1},
                              {problem.u_group, p},
                              {aux.omega_group, r},
                              {problem.v_group, q}});

    // slot maps from the original signatures into the transformed one
    std::vector<int> f_map(n + p + q);
    for (int i = 0; i < n; ++i) f_map[i] = i;
    for (int j = 0; j < p; ++j) f_map[n + j] = n + 1 + j;           // u after nu
    for (int j = 0; j < q; ++j) f_map[n + p + j] = n + 1 + p + r + j;
    std::vector<int> g_map(n + r);
    for (int i = 0; i < n; ++i) g_map[i] = i;
    for (int j = 0; j < r; ++j) g_map[n + j] = n + 1 + p + j;

    const int nu_slot = n;
    std::vector<expr::Expr> components;
    components.reserve(n);
    for (int i = 0; i < n; ++i) {
        expr::Expr f_part = expr::make_binary(expr::NodeKind::Mul,
                                              expr::make_var(nu_slot),
                                              remap(problem.f.component(i), f_map));
        expr::Expr g_part = expr::make_binary(
            expr::NodeKind::Mul,
            expr::make_binary(expr::NodeKind::Sub, expr::make_const(1.0),
                              expr::make_var(nu_slot)),
            remap(aux.g.component(i), g_map));
        components.push_back(expr::make_binary(expr::NodeKind::Add, std::move(f_part),
                                               std::move(g_part)));
    }

    TransformedProblem tp;
    tp.f_star = expr::VectorField(sig, std::move(components));
    tp.Q = problem.Q;
    tp.horizon = problem.horizon;
    tp.terminal = aux.terminal;

    // canonical velocity-equivalent sample of {0,1} x P x Omega
    tp.P_star.dim = 1 + p + r;
    const std::vector<double>& u0 = problem.P.points.front();
    const std::vector<double>& w0 = aux.omega.points.front();
    for (const auto& u : problem.P.points) {
        std::vector<double> pt;
        pt.push_back(1.0);
        pt.insert(pt.end(), u.begin(), u.end());
        pt.insert(pt.end(), w0.begin(), w0.end());
        tp.P_star.points.push_back(std::move(pt));
    }
    for (const auto& w : aux.omega.points) {
        std::vector<double> pt;
        pt.push_back(0.0);
        pt.insert(pt.end(), u0.begin(), u0.end());
        pt.insert(pt.end(), w.begin(), w.end());
        tp.P_star.points.push_back(std::move(pt));
    }
    tp.P_star.descriptor =
        SetDescriptor::explicit_points(tp.P_star.points);
    return tp;
}

}  // namespace sb::game
