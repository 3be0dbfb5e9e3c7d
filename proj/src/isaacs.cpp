#include "sb/isaacs.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace sb::isaacs {

namespace {

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

void normalize(std::vector<double>& v) {
    double norm = 0.0;
    for (double c : v) norm += c * c;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& c : v) c /= norm;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Lowest-index argmin over the player sample of max over the adversary
// sample, plus max-min, for a generic evaluator value(pi, ai).
template <typename Value>
GapSample minmax_maxmin(int players, int adversaries, Value&& value) {
    GapSample out;
    double minmax = 0.0;
    int arg_player = 0;
    for (int pi = 0; pi < players; ++pi) {
        double inner = -std::numeric_limits<double>::infinity();
        for (int ai = 0; ai < adversaries; ++ai)
            inner = std::max(inner, value(pi, ai));
        if (pi == 0 || inner < minmax) {
            minmax = inner;
            arg_player = pi;
        }
    }
    double maxmin = 0.0;
    int arg_adv = 0;
    for (int ai = 0; ai < adversaries; ++ai) {
        double inner = std::numeric_limits<double>::infinity();
        for (int pi = 0; pi < players; ++pi)
            inner = std::min(inner, value(pi, ai));
        if (ai == 0 || inner > maxmin) {
            maxmin = inner;
            arg_adv = ai;
        }
    }
    out.minmax = minmax;
    out.maxmin = maxmin;
    out.gap = minmax - maxmin;
    out.argmin_player = arg_player;
    out.argmax_adversary = arg_adv;
    return out;
}

}  // namespace

std::vector<std::vector<double>> direction_samples(int dim, int count) {
    if (dim > 8) throw std::invalid_argument("direction_samples: dim > 8 unsupported");
    std::vector<std::vector<double>> out;
    for (int a = 0; a < dim && static_cast<int>(out.size()) < count; ++a) {
        std::vector<double> plus(dim, 0.0), minus(dim, 0.0);
        plus[a] = 1.0;
        minus[a] = -1.0;
        out.push_back(plus);
        if (static_cast<int>(out.size()) < count) out.push_back(minus);
    }
    // Low-discrepancy spread: Halton points mapped to gaussians, normalized.
    unsigned index = 1;
    while (static_cast<int>(out.size()) < count) {
        std::vector<double> v(dim);
        for (int a = 0; a < dim; ++a) {
            const double u1 = std::max(halton(index, kPrimes[a]), 1e-12);
            const double u2 = halton(index + 7, kPrimes[a]);
            v[a] = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * M_PI * u2);
        }
        ++index;
        normalize(v);
        double norm = 0.0;
        for (double c : v) norm += c * c;
        if (norm > 0.5) out.push_back(std::move(v));
    }
    return out;
}

std::vector<std::vector<double>> state_samples(
    std::span<const std::array<double, 2>> bounds, int count) {
    std::vector<std::vector<double>> out;
    const int dim = static_cast<int>(bounds.size());
    if (dim > 8) throw std::invalid_argument("state_samples: dim > 8 unsupported");
    for (int k = 0; k < count; ++k) {
        std::vector<double> x(dim);
        for (int a = 0; a < dim; ++a) {
            const double t = halton(static_cast<unsigned>(k + 1), kPrimes[a]);
            x[a] = bounds[a][0] + t * (bounds[a][1] - bounds[a][0]);
        }
        out.push_back(std::move(x));
    }
    return out;
}

IsaacsReport isaacs_gap(const expr::VectorField& f,
                        const game::SampledControlSet& P,
                        const game::SampledControlSet& Q,
                        std::span<const std::vector<double>> xs,
                        std::span<const std::vector<double>> ss) {
    IsaacsReport report;
    std::vector<double> params(P.dim + Q.dim);
    std::vector<double> vel(f.state_dim());
    for (const auto& x : xs) {
        for (const auto& s_raw : ss) {
            std::vector<double> s = s_raw;
            normalize(s);
            auto value = [&](int pi, int ai) {
                std::copy(P.points[pi].begin(), P.points[pi].end(), params.begin());
                std::copy(Q.points[ai].begin(), Q.points[ai].end(),
                          params.begin() + P.dim);
                f.eval_into(x, params, vel);
                return dot(s, vel);
            };
            GapSample sample = minmax_maxmin(P.size(), Q.size(), value);
            sample.x = x;
            sample.s = std::move(s);
            report.max_gap = std::max(report.max_gap, sample.gap);
            report.samples.push_back(std::move(sample));
        }
    }
    return report;
}

IsaacsReport isaacs_gap_transformed(const game::TransformedProblem& tp,
                                    std::span<const std::vector<double>> xs,
                                    std::span<const std::vector<double>> ss) {
    IsaacsReport report;
    const game::SampledControlSet& P = tp.P_star;
    const game::SampledControlSet& Q = tp.Q;
    std::vector<double> params(P.dim + Q.dim);
    std::vector<double> vel(tp.f_star.state_dim());
    for (const auto& x : xs) {
        for (const auto& s_raw : ss) {
            std::vector<double> s = s_raw;
            normalize(s);
            auto value = [&](int pi, int ai) {
                std::copy(P.points[pi].begin(), P.points[pi].end(), params.begin());
                std::copy(Q.points[ai].begin(), Q.points[ai].end(),
                          params.begin() + P.dim);
                tp.f_star.eval_into(x, params, vel);
                return dot(s, vel);
            };
            GapSample sample = minmax_maxmin(P.size(), Q.size(), value);
            sample.x = x;
            sample.s = std::move(s);
            // nu component of the minimizing P* point tells the proof branch
            sample.branch =
                P.points[sample.argmin_player][0] == 1.0 ? 1 : 0;
            report.max_gap = std::max(report.max_gap, sample.gap);
            report.samples.push_back(std::move(sample));
        }
    }
    return report;
}

void save_csv(const IsaacsReport& report, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    if (report.samples.empty()) {
        os << "minmax,maxmin,gap,case\n";
        return;
    }
    const std::size_t dim = report.samples.front().x.size();
    for (std::size_t a = 0; a < dim; ++a) os << "x" << a + 1 << ",";
    for (std::size_t a = 0; a < dim; ++a) os << "s" << a + 1 << ",";
    os << "minmax,maxmin,gap,case\n";
    os.precision(17);
    for (const GapSample& g : report.samples) {
        for (double v : g.x) os << v << ',';
        for (double v : g.s) os << v << ',';
        os << g.minmax << ',' << g.maxmin << ',' << g.gap << ','
           << (g.branch < 0 ? std::string("-")
                            : g.branch == 1 ? std::string("f") : std::string("g"))
           << '\n';
    }
}

}  // namespace sb::isaacs
