#pragma once

// Built-in densities, samplers and costs reproducing the four worked examples
// at desk scale, heatmap emission, and the fiber-cardinality diagnostic.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "motlp/discretization.hpp"
#include "motlp/errors.hpp"
#include "motlp/measures.hpp"
#include "motlp/mot.hpp"

namespace motlp {

// ---------------------------------------------------------------------------
// Densities.

namespace density {

// Normalizer of the truncated-Gamma density x^{3/2} e^{-x} on [0,1].
inline double ex1_norm() {
    static const double c = quad::integrate(
        [](double x) { return std::pow(x, 1.5) * std::exp(-x); }, 0.0, 1.0, 1e-15);
    return c;
}

inline double ex1_rho(double x) {
    if (x < 0.0 || x > 1.0) return 0.0;
    return std::pow(x, 1.5) * std::exp(-x) / ex1_norm();
}

// Mixture sigma(y) = rho(y/2)/6 + 4 rho(2y)/3; the image of rho under the
// mean-preserving kernel y = 2x w.p. 1/3, y = x/2 w.p. 2/3.
inline double ex1_sigma(double y) {
    return ex1_rho(y / 2.0) / 6.0 + 4.0 * ex1_rho(2.0 * y) / 3.0;
}

// Lognormal marginals with unit mean and variance parameter 2^{k-3}, k=1,2,3.
inline double ex2_bs(int k, double x) {
    if (x <= 0.0) return 0.0;
    double twok2 = std::pow(2.0, k - 2); // 2 s^2
    double mu = -std::pow(2.0, k - 4);   // -s^2/2
    double lx = std::log(x);
    return std::exp(-(lx - mu) * (lx - mu) / twok2) /
           (x * std::sqrt(twok2 * 3.14159265358979323846));
}

inline double ex3_uniform_square(double y1, double y2) {
    return (std::abs(y1) <= 1.0 && std::abs(y2) <= 1.0) ? 0.25 : 0.0;
}

// Frame density on [-2,2]^2 \ (-1,1)^2, affine in one coordinate per strip.
inline double ex3_frame(double y1, double y2) {
    if (y1 >= 1.0 && y1 <= 2.0 && std::abs(y2) <= 1.0) return (2.0 - y1) / 4.0;
    if (y1 >= -2.0 && y1 <= -1.0 && std::abs(y2) <= 1.0) return (2.0 + y1) / 4.0;
    if (y2 >= 1.0 && y2 <= 2.0 && std::abs(y1) <= 1.0) return (2.0 - y2) / 4.0;
    if (y2 >= -2.0 && y2 <= -1.0 && std::abs(y1) <= 1.0) return (2.0 + y2) / 4.0;
    return 0.0;
}

inline double ex4_raw(double x1, double x2, double x3) {
    if (std::abs(x1) > 1.0 || std::abs(x2) > 1.0 || std::abs(x3) > 1.0) return 0.0;
    return (std::abs(x1) + std::abs(x2 * x3)) / (1.0 + x1 * x1 + 2.0 * x2 * x2 + 3.0 * x3 * x3);
}

// Normalizer over [-1,1]^3 via tensor Simpson on the positive octant (the
// integrand is even in every coordinate and smooth there).
inline double ex4_norm() {
    static const double c = [] {
        const int n = 64; // panels per axis
        const double h = 1.0 / n;
        auto w1 = [&](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
        double total = 0.0;
        for (int i = 0; i <= n; ++i)
            for (int j = 0; j <= n; ++j)
                for (int k = 0; k <= n; ++k)
                    total += w1(i) * w1(j) * w1(k) * ex4_raw(i * h, j * h, k * h);
        total *= h * h * h / 27.0;
        return 8.0 * total;
    }();
    return c;
}

inline double ex4_rho(double x1, double x2, double x3) {
    return ex4_raw(x1, x2, x3) / ex4_norm();
}

} // namespace density

// ---------------------------------------------------------------------------
// Costs.

struct BuiltinCost {
    std::string tag;
    int n_marginals = 2;
    int dim = 1;
    CostEval eval;
};

inline BuiltinCost make_cost(const std::string& tag,
                             const std::map<std::string, double>& params = {}) {
    auto get = [&](const std::string& k, double dflt) {
        auto it = params.find(k);
        return it == params.end() ? dflt : it->second;
    };
    if (tag == "exp_spread")
        return {tag, 2, 1,
                [](std::span<const double> v) { return std::exp(v[0] - v[1]); }};
    if (tag == "quadratic_spread")
        return {tag, 2, 1, [](std::span<const double> v) {
                    double s = v[1] - v[0];
                    return s * s;
                }};
    if (tag == "plain_spread")
        return {tag, 2, 1, [](std::span<const double> v) { return v[1] - v[0]; }};
    if (tag == "lookback")
        return {tag, 3, 1, [](std::span<const double> v) {
                    return std::max(v[0], std::max(v[1], v[2])) - v[2];
                }};
    if (tag == "asian") {
        double lambda = get("lambda", 2.0);
        return {tag, 3, 1, [lambda](std::span<const double> v) {
                    return std::max(0.0, (v[0] + v[1] + v[2]) / 3.0 - lambda * v[2]);
                }};
    }
    if (tag == "neg_euclidean")
        return {tag, 2, 2, [](std::span<const double> v) {
                    double a = v[0] - v[2], b = v[1] - v[3];
                    return -std::sqrt(a * a + b * b);
                }};
    if (tag == "basket_forward_start") {
        double l1 = get("lambda1", 0.5), l2 = get("lambda2", 1.0 / 3.0),
               l3 = get("lambda3", 1.0 / 6.0), K = get("K", 1.0);
        return {tag, 2, 3, [l1, l2, l3, K](std::span<const double> v) {
                    double s = l1 * std::abs(v[0] - v[3]) + l2 * std::abs(v[1] - v[4]) +
                               l3 * std::abs(v[2] - v[5]);
                    return std::max(0.0, s - K);
                }};
    }
    raise(ErrorCode::InvalidArgument, "unknown cost tag " + tag);
}

// ---------------------------------------------------------------------------
// Accept-reject samplers with a uniform envelope scaled by a scanned maximum.

struct AcceptRejectSampler {
    std::function<double(std::span<const double>)> density;
    int dim = 1;
    double lo = 0.0, hi = 1.0;
    double envelope = 1.0;           // dominates the density on the box
    std::int64_t retry_cap = 1000000; // per draw

    Point operator()(CounterRng& rng) const {
        Point x(dim);
        for (std::int64_t it = 0; it < retry_cap; ++it) {
            for (int k = 0; k < dim; ++k) x[k] = rng.next_uniform(lo, hi);
            double r = density(x);
            if (r > envelope)
                raise(ErrorCode::SamplerFailure, "envelope does not dominate the density");
            if (rng.next_uniform() * envelope < r) return x;
        }
        raise(ErrorCode::SamplerFailure, "accept-reject retry cap exhausted");
    }
};

// Envelope from a grid scan with a 25% safety margin; dominance is enforced
// at every proposal.
inline double scan_max(const std::function<double(std::span<const double>)>& f, int dim, double lo,
                       double hi, int per_axis) {
    double best = 0.0;
    std::vector<int> idx(dim, 0);
    Point x(dim);
    bool done = false;
    while (!done) {
        for (int k = 0; k < dim; ++k)
            x[k] = lo + (hi - lo) * idx[k] / static_cast<double>(per_axis - 1);
        best = std::max(best, f(x));
        for (int k = dim - 1;; --k) {
            if (k < 0) {
                done = true;
                break;
            }
            if (++idx[k] < per_axis) break;
            idx[k] = 0;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Fiber diagnostic: mass of first-marginal atoms whose conditional support
// exceeds the threshold.

struct FiberDiagnostic {
    int threshold_atoms = 3;
    double weight_floor = 1e-6;
    double flagged_mass = 0.0;
};

inline FiberDiagnostic count_multi_point_fibers(const TransportPlan& plan, FiberDiagnostic diag) {
    if (plan.n_marginals() != 2)
        raise(ErrorCode::InvalidArgument, "fiber diagnostic needs N = 2");
    std::map<std::int32_t, std::pair<double, int>> fibers; // i -> (mass, #atoms above floor)
    for (const auto& [idx, w] : plan.mass) {
        auto& f = fibers[idx[0]];
        f.first += w;
        if (w > diag.weight_floor) f.second += 1;
    }
    diag.flagged_mass = 0.0;
    for (const auto& [i, f] : fibers)
        if (f.second > diag.threshold_atoms) diag.flagged_mass += f.first;
    return diag;
}

// ---------------------------------------------------------------------------
// Heatmap emission: project the plan on selected (marginal, coordinate) axes
// and write CSV rows (axis values..., mass).

struct AxisSelector {
    int marginal = 0;
    int coord = 0;
};

inline double emit_heatmap(const TransportPlan& plan, const std::vector<AxisSelector>& axes,
                           std::ostream& os) {
    if (axes.size() != 2 && axes.size() != 3)
        raise(ErrorCode::InvalidArgument, "heatmap needs two or three axes");
    for (const auto& a : axes) {
        if (a.marginal < 0 || a.marginal >= plan.n_marginals() || a.coord < 0 ||
            a.coord >= plan.dim)
            raise(ErrorCode::InvalidArgument, "axis selector out of range");
    }
    std::map<std::vector<double>, double> agg;
    for (const auto& [idx, w] : plan.mass) {
        std::vector<double> key;
        key.reserve(axes.size());
        for (const auto& a : axes) key.push_back(plan.supports[a.marginal][idx[a.marginal]][a.coord]);
        agg[key] += w;
    }
    for (std::size_t k = 0; k < axes.size(); ++k) os << (k ? ",axis" : "axis") << k + 1;
    os << ",mass\n";
    char buf[40];
    std::vector<double> totals;
    for (const auto& [key, w] : agg) {
        for (std::size_t k = 0; k < key.size(); ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", key[k]);
            os << (k ? "," : "") << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.17g", w);
        os << "," << buf << "\n";
        totals.push_back(w);
    }
    double total = totals.empty() ? 0.0 : stable_sum(totals);
    if (std::abs(total - 1.0) > 1e-9)
        raise(ErrorCode::NumericalFailure, "heatmap mass does not sum to one");
    return total;
}

inline double emit_heatmap(const TransportPlan& plan, const std::vector<AxisSelector>& axes,
                           const std::string& path, const std::string& provenance_line = "") {
    std::ofstream os(path);
    if (!os) raise(ErrorCode::IOFailure, "cannot open " + path);
    if (!provenance_line.empty()) os << "# " << provenance_line << "\n";
    double total = emit_heatmap(plan, axes, os);
    if (!os.good()) raise(ErrorCode::IOFailure, "write failed for " + path);
    return total;
}

// ---------------------------------------------------------------------------
// Example builders.

struct ExampleParams {
    double theta = 2.0;     // example 2 moment order
    double lambda = 2.0;    // asian cost parameter
    std::string cost_tag;   // override for example 2 ("lookback" or "asian")
    double K = 1.0;         // example 4 strike
    std::uint64_t seed = 1; // example 4 sampling seed
    int size_cap_n = 0;     // 0: use the per-example desk-scale default
};

struct ExampleBundle {
    MOTInstance instance;
    std::vector<DiscreteMeasure> discretized;
    RelaxationEntry entry;
};

namespace exdetail {

inline void check_cap(int n, int dflt_cap, int override_cap, const std::string& which) {
    int cap = override_cap > 0 ? override_cap : dflt_cap;
    if (n > cap)
        raise(ErrorCode::SizeCap, which + " capped at n = " + std::to_string(cap) +
                                      " (requested " + std::to_string(n) + ")");
}

// Point-estimate tabulation on {i/n : 0 <= i < count} with the residual at 0.
inline DiscreteMeasure tabulate_left(const std::function<double(double)>& rho, int n, int count) {
    std::vector<Atom> atoms;
    std::vector<double> ws;
    for (int i = 1; i < count; ++i) {
        double w = rho(static_cast<double>(i) / n) / n;
        if (w < 0.0) raise(ErrorCode::InvalidMeasure, "negative density");
        atoms.push_back({Point{static_cast<double>(i) / n}, w});
        ws.push_back(w);
    }
    double rest = ws.empty() ? 0.0 : stable_sum(ws);
    if (rest > 1.0) raise(ErrorCode::NegativeResidual, "tabulation mass exceeds one");
    atoms.push_back({Point{0.0}, 1.0 - rest});
    return normalize_merge(1, std::move(atoms));
}

} // namespace exdetail

// Example 1: the one-step model with the truncated-Gamma marginal, its
// mean-preserving mixture image, and the exponential spread cost.
inline ExampleBundle build_example1(int n, const ExampleParams& params = {}) {
    exdetail::check_cap(n, 50, params.size_cap_n, "example 1");
    const double L = 7.0; // published Lipschitz constant of both densities

    ExampleBundle b;
    b.discretized.push_back(exdetail::tabulate_left(density::ex1_rho, n, n));
    b.discretized.push_back(exdetail::tabulate_left(density::ex1_sigma, n, 2 * n));

    BuiltinCost cost = make_cost("exp_spread");
    b.instance.n_marginals = 2;
    b.instance.dim = 1;
    b.instance.cost = cost.eval;
    b.instance.cost_tag = cost.tag;
    // supports live in [0,1] x [0,2]: sup e^{x-y} = e
    b.instance.lipschitz_c = std::exp(1.0);
    b.instance.dyy_bound = std::exp(1.0);

    b.entry.n = n;
    b.entry.eps = (3.0 * L + 2.0) / n;
    DiscretizationResult mu_r, nu_r;
    mu_r.measure = b.discretized[0];
    mu_r.w1_bound = (L / 2.0 + 1.0) / n; // modulus sum over the unit support
    mu_r.kind = BoundKind::bounded_support_eps_n;
    mu_r.provenance = {{"n", double(n)}, {"L", L}};
    nu_r.measure = b.discretized[1];
    nu_r.w1_bound = (2.0 * L + 1.0) / n; // support of length two
    nu_r.kind = BoundKind::bounded_support_eps_n;
    nu_r.provenance = {{"n", double(n)}, {"L", L}};
    b.entry.marginals = {std::move(mu_r), std::move(nu_r)};
    return b;
}

// Example 2: three lognormal marginals via the cell-minimum scheme with
// j = m = m_n, and a lookback or Asian payoff.
inline ExampleBundle build_example2(int n, const ExampleParams& params = {}) {
    exdetail::check_cap(n, 20, params.size_cap_n, "example 2");
    const double L = 12.0;
    const double theta = params.theta;
    if (!(theta > 1.0)) raise(ErrorCode::InvalidCase, "theta must exceed 1");
    const double m_theta = std::exp(theta * (theta - 1.0));
    const int m_n = static_cast<int>(
        std::floor(std::pow(n * (theta - 1.0) * m_theta / L, 1.0 / (theta + 1.0))));
    if (m_n < 1) raise(ErrorCode::InvalidArgument, "schedule gives m_n < 1; increase n");

    ExampleBundle b;
    for (int k = 1; k <= 3; ++k) {
        // unimodal density: the cell minimum sits at an endpoint
        auto rho = [k](double x) { return density::ex2_bs(k, x); };
        std::vector<Atom> atoms;
        std::vector<double> ws;
        for (int i = 1; i < m_n * n; ++i) {
            double a = static_cast<double>(i) / n, c = static_cast<double>(i + 1) / n;
            double w = std::min(rho(a), rho(c)) / n;
            atoms.push_back({Point{a}, w});
            ws.push_back(w);
        }
        double rest = ws.empty() ? 0.0 : stable_sum(ws);
        if (rest > 1.0) raise(ErrorCode::NegativeResidual, "tabulation mass exceeds one");
        atoms.push_back({Point{0.0}, 1.0 - rest});
        b.discretized.push_back(normalize_merge(1, std::move(atoms)));
    }

    std::string tag = params.cost_tag.empty() ? "lookback" : params.cost_tag;
    BuiltinCost cost = make_cost(tag, {{"lambda", params.lambda}});
    if (cost.n_marginals != 3) raise(ErrorCode::InvalidArgument, "example 2 needs an N=3 cost");
    b.instance.n_marginals = 3;
    b.instance.dim = 1;
    b.instance.cost = cost.eval;
    b.instance.cost_tag = tag;
    b.instance.lipschitz_c = tag == "lookback" ? 2.0 : 1.0 / 3.0 + params.lambda;

    double per_marginal = 1.0 / n + 5.0 * m_theta / std::pow(m_n, theta - 1.0) +
                          2.0 * m_n * m_n * L / n;
    b.entry.n = n;
    b.entry.eps = 3.0 * per_marginal;
    for (int k = 0; k < 3; ++k) {
        DiscretizationResult r;
        r.measure = b.discretized[k];
        r.w1_bound = per_marginal;
        r.kind = BoundKind::cellmin_tau_mn;
        r.provenance = {{"n", double(n)}, {"m", double(m_n)}, {"theta", theta}};
        b.entry.marginals.push_back(std::move(r));
    }
    return b;
}

// Example 2 schedule helper, exposed for tests: m_n = floor((n(theta-1)M/L)^{1/(theta+1)}).
inline int example2_m_n(int n, double theta) {
    const double m_theta = std::exp(theta * (theta - 1.0));
    return static_cast<int>(
        std::floor(std::pow(n * (theta - 1.0) * m_theta / 12.0, 1.0 / (theta + 1.0))));
}

// Example 3: uniform square vs frame in d = 2 with the negative euclidean
// cost; both tabulations are exact cell integrals in closed form.
inline ExampleBundle build_example3(int n, const ExampleParams& params = {}) {
    exdetail::check_cap(n, 20, params.size_cap_n, "example 3");
    ExampleBundle b;

    {
        std::vector<Atom> atoms;
        double w = 1.0 / (4.0 * n * n);
        for (int i = -n; i < n; ++i)
            for (int j = -n; j < n; ++j)
                atoms.push_back({Point{static_cast<double>(i) / n, static_cast<double>(j) / n}, w});
        b.discretized.push_back(normalize_merge(2, std::move(atoms)));
    }
    {
        std::vector<Atom> atoms;
        const double n3 = 8.0 * std::pow(static_cast<double>(n), 3);
        for (int i = -2 * n; i < 2 * n; ++i)
            for (int j = -2 * n; j < 2 * n; ++j) {
                double w = 0.0;
                if (i >= -2 * n && i <= -n - 1 && j >= -n && j <= n - 1)
                    w = (4.0 * n + 2.0 * i + 1.0) / n3;
                else if (i >= -n && i <= n - 1 && j >= -2 * n && j <= -n - 1)
                    w = (4.0 * n + 2.0 * j + 1.0) / n3;
                else if (i >= -n && i <= n - 1 && j >= n && j <= 2 * n - 1)
                    w = (4.0 * n - 2.0 * j - 1.0) / n3;
                else if (i >= n && i <= 2 * n - 1 && j >= -n && j <= n - 1)
                    w = (4.0 * n - 2.0 * i - 1.0) / n3;
                if (w > 0.0)
                    atoms.push_back(
                        {Point{static_cast<double>(i) / n, static_cast<double>(j) / n}, w});
            }
        b.discretized.push_back(normalize_merge(2, std::move(atoms)));
    }

    BuiltinCost cost = make_cost("neg_euclidean");
    b.instance.n_marginals = 2;
    b.instance.dim = 2;
    b.instance.cost = cost.eval;
    b.instance.cost_tag = cost.tag;
    b.instance.lipschitz_c = 1.0;
    (void)params;

    b.entry.n = n;
    b.entry.eps = 4.0 / n;
    for (int k = 0; k < 2; ++k) {
        DiscretizationResult r;
        r.measure = b.discretized[k];
        r.w1_bound = 2.0 / n; // d/n with exact cells
        r.kind = BoundKind::exact_cells_dn;
        r.provenance = {{"n", double(n)}, {"d", 2.0}};
        b.entry.marginals.push_back(std::move(r));
    }
    return b;
}

// Example 4: d = 3 forward-start basket via the sampler path only; the second
// marginal adds an independent standard normal triple.
inline ExampleBundle build_example4(int m_atoms, const ExampleParams& params = {}) {
    exdetail::check_cap(m_atoms, 15, params.size_cap_n, "example 4");

    auto rho = [](std::span<const double> v) { return density::ex4_rho(v[0], v[1], v[2]); };
    double env = 1.25 * scan_max(rho, 3, -1.0, 1.0, 101);
    AcceptRejectSampler base{rho, 3, -1.0, 1.0, env};

    SamplerSpec mu_spec;
    mu_spec.dim = 3;
    mu_spec.theta = 2.0;
    double C = density::ex4_norm();
    double m2 = 3.0 / C * (4.5 + 8.0 / std::sqrt(2.0 * 3.14159265358979323846));
    mu_spec.m_theta = m2;
    mu_spec.draw = [base](CounterRng& rng) { return base(rng); };

    SamplerSpec nu_spec = mu_spec;
    nu_spec.draw = [base](CounterRng& rng) {
        Point x = base(rng);
        for (int k = 0; k < 3; ++k) x[k] += rng.next_normal();
        return x;
    };

    ExampleBundle b;
    DiscretizationResult mu_r = empirical_discretize(mu_spec, m_atoms, params.seed);
    DiscretizationResult nu_r = empirical_discretize(nu_spec, m_atoms, params.seed + 0x9e3779b9ULL);
    b.discretized = {mu_r.measure, nu_r.measure};

    BuiltinCost cost = make_cost("basket_forward_start", {{"lambda1", 0.5},
                                                          {"lambda2", 1.0 / 3.0},
                                                          {"lambda3", 1.0 / 6.0},
                                                          {"K", params.K}});
    b.instance.n_marginals = 2;
    b.instance.dim = 3;
    b.instance.cost = cost.eval;
    b.instance.cost_tag = cost.tag;
    b.instance.lipschitz_c = 0.5; // max lambda_i in l1

    b.entry.n = m_atoms;
    EpsBound eb = epsilon_from_bounds({mu_r, nu_r});
    b.entry.eps = eb.eps; // 2 C(2,3) m^{-1/3}
    b.entry.marginals = {std::move(mu_r), std::move(nu_r)};
    return b;
}

inline ExampleBundle build_example(int id, int n, const ExampleParams& params = {}) {
    switch (id) {
    case 1: return build_example1(n, params);
    case 2: return build_example2(n, params);
    case 3: return build_example3(n, params);
    case 4: return build_example4(n, params);
    default: raise(ErrorCode::InvalidArgument, "example id must be 1..4");
    }
}

} // namespace motlp
