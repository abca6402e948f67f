#pragma once

// Finitely supported approximations with certified Wasserstein error bounds:
// truncation, grid discretization with the Young-optimal radius, density
// point-estimate schemes, the mean/convex-order preserving 1D scheme, and
// empirical sampling with the explicit Fournier-Guillin constants.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "motlp/errors.hpp"
#include "motlp/measures.hpp"
#include "motlp/rng.hpp"

namespace motlp {

enum class BoundKind {
    exact_cells_dn,
    bounded_support_eps_n,
    uniform_eps_mn,
    cellmin_tau_mn,
    dolinsky_soner_1_over_n,
    empirical_chi,
    exact_zero,
};

inline const char* bound_kind_name(BoundKind k) {
    switch (k) {
    case BoundKind::exact_cells_dn: return "exact_cells_dn";
    case BoundKind::bounded_support_eps_n: return "bounded_support_eps_n";
    case BoundKind::uniform_eps_mn: return "uniform_eps_mn";
    case BoundKind::cellmin_tau_mn: return "cellmin_tau_mn";
    case BoundKind::dolinsky_soner_1_over_n: return "dolinsky_soner_1_over_n";
    case BoundKind::empirical_chi: return "empirical_chi";
    case BoundKind::exact_zero: return "exact_zero";
    }
    return "unknown";
}

enum class GridMode { exact_cells, point_estimate, cell_min };

struct GridParams {
    int n = 1;          // grid step 1/n
    double m_or_R = 1.0; // truncation radius
    GridMode mode = GridMode::point_estimate;
};

struct DiscretizationResult {
    DiscreteMeasure measure;
    double w1_bound = 0.0;
    BoundKind kind = BoundKind::exact_zero;
    bool stochastic = false; // bound holds in expectation only
    std::vector<std::pair<std::string, double>> provenance;
    std::string rng_id; // set for sampled results
};

// ---------------------------------------------------------------------------
// Truncation: mass outside the box B_R = {|x_i| <= R for all i} moves to the
// origin.

struct TruncateResult {
    MarginalSpec spec;
    double w1_bound = 0.0;
};

inline bool point_in_box(const Point& x, double R) {
    for (double v : x)
        if (std::abs(v) > R) return false;
    return true;
}

inline TruncateResult truncate(const MarginalSpec& spec, double R) {
    if (!(R > 0.0)) raise(ErrorCode::InvalidArgument, "truncation radius must be positive");
    if (const auto* tab = std::get_if<TabulatedSpec>(&spec)) {
        const auto& m = tab->measure;
        m.validate();
        double inside = 0.0;
        for (const auto& a : m.atoms)
            if (point_in_box(a.x, R)) inside += a.w;
        if (!(inside > 0.0)) raise(ErrorCode::ZeroMass, "no mass inside the truncation box");
        std::vector<Atom> atoms;
        std::vector<double> tail;
        Point origin(m.dim, 0.0);
        for (const auto& a : m.atoms) {
            if (point_in_box(a.x, R)) {
                atoms.push_back(a);
            } else {
                atoms.push_back({origin, a.w});
                tail.push_back(a.w * l1_norm(a.x));
            }
        }
        TruncateResult out{TabulatedSpec{normalize_merge(m.dim, std::move(atoms))},
                           tail.empty() ? 0.0 : stable_sum(tail)};
        return out;
    }
    if (const auto* den = std::get_if<DensitySpec>(&spec)) {
        DensitySpec trunc = *den;
        double bound = 0.0;
        if (!(den->support_radius && *den->support_radius <= R))
            bound = den->m_theta / std::pow(R, den->theta - 1.0);
        trunc.support_radius = den->support_radius ? std::min(*den->support_radius, R) : R;
        return {trunc, bound};
    }
    raise(ErrorCode::InvalidArgument, "cannot truncate a sampler spec");
}

// ---------------------------------------------------------------------------
// Grid discretization of a tabulated measure: every atom moves to its cell
// corner floor(n x)/n; the distance moved is below 1/n per coordinate.

namespace discdetail {

// floor(v) with a snap for products n*x that land within 1e-9 below an
// integer, so grid-rational inputs map to their exact cell.
inline long long grid_floor(double v) {
    double f = std::floor(v);
    if (v - f >= 1.0 - 1e-9) return static_cast<long long>(f) + 1;
    return static_cast<long long>(f);
}

} // namespace discdetail

inline DiscretizationResult grid_discretize(const DiscreteMeasure& mu, int n) {
    if (n < 1) raise(ErrorCode::InvalidArgument, "grid parameter n must be >= 1");
    mu.validate();
    std::vector<Atom> atoms;
    atoms.reserve(mu.size());
    for (const auto& a : mu.atoms) {
        Point q(mu.dim);
        for (int k = 0; k < mu.dim; ++k)
            q[k] = static_cast<double>(discdetail::grid_floor(n * a.x[k])) / n;
        atoms.push_back({std::move(q), a.w});
    }
    DiscretizationResult out;
    out.measure = normalize_merge(mu.dim, std::move(atoms));
    out.w1_bound = static_cast<double>(mu.dim) / n;
    out.kind = BoundKind::exact_cells_dn;
    out.provenance = {{"n", static_cast<double>(n)}, {"d", static_cast<double>(mu.dim)}};
    return out;
}

// Young-optimal truncation radius R_n = (theta M_theta n / (gamma d))^{1/(theta-1)}
// with gamma the conjugate exponent; the combined bound is gamma d / n.
inline double choose_truncation_radius(double theta, double m_theta, int d, int n) {
    if (!(theta > 1.0)) raise(ErrorCode::InvalidCase, "theta must exceed 1");
    double gamma = theta / (theta - 1.0);
    return std::pow(theta * m_theta * n / (gamma * d), 1.0 / (theta - 1.0));
}

// ---------------------------------------------------------------------------
// Density schemes: weight rho(x_q)/n^d on the grid points of B_m, residual
// mass at the origin.

inline DiscretizationResult density_grid_estimate(const DensitySpec& spec, int n, int m,
                                                  GridMode mode) {
    if (n < 1 || m < 1) raise(ErrorCode::InvalidArgument, "n and m must be >= 1");
    if (!spec.evaluator) raise(ErrorCode::InvalidArgument, "density evaluator missing");
    if (mode == GridMode::cell_min && !spec.cell_min_oracle)
        raise(ErrorCode::MissingOracle, "cell_min mode needs a cell minimizer oracle");
    validate_spec(MarginalSpec{spec});
    const int d = spec.dim;
    const double nd = std::pow(static_cast<double>(n), d);

    // scan range per axis: cells q with V(q/n) meeting B_m (and the support box)
    long long lo = -static_cast<long long>(m) * n;
    long long hi = static_cast<long long>(m) * n;
    if (spec.support_radius) {
        double R0 = *spec.support_radius;
        lo = std::max(lo, static_cast<long long>(std::floor(-R0 * n)) - 1);
        hi = std::min(hi, static_cast<long long>(std::ceil(R0 * n)) + 1);
    }
    if (lo > hi) raise(ErrorCode::ZeroMass, "empty scan range");

    std::vector<Atom> atoms;
    std::vector<double> weights_accum;
    Point q(d, 0.0);
    std::vector<long long> idx(d, lo);
    Point eval_pt(d, 0.0);
    bool done = false;
    while (!done) {
        bool is_origin = true;
        for (int k = 0; k < d; ++k)
            if (idx[k] != 0) {
                is_origin = false;
                break;
            }
        if (!is_origin) {
            for (int k = 0; k < d; ++k) q[k] = static_cast<double>(idx[k]) / n;
            double rho = 0.0;
            switch (mode) {
            case GridMode::exact_cells:
                for (int k = 0; k < d; ++k) eval_pt[k] = (idx[k] + 0.5) / n;
                rho = spec.evaluator(eval_pt);
                break;
            case GridMode::point_estimate:
                rho = spec.evaluator(q);
                break;
            case GridMode::cell_min: {
                Cell cell;
                cell.lo = q;
                cell.hi.resize(d);
                for (int k = 0; k < d; ++k) cell.hi[k] = static_cast<double>(idx[k] + 1) / n;
                Point x = (*spec.cell_min_oracle)(cell);
                rho = spec.evaluator(x);
                break;
            }
            }
            if (rho < 0.0) raise(ErrorCode::InvalidMeasure, "negative density value");
            if (rho > 0.0) {
                double w = rho / nd;
                atoms.push_back({q, w});
                weights_accum.push_back(w);
            }
        }
        // odometer over the box
        for (int k = d - 1;; --k) {
            if (k < 0) {
                done = true;
                break;
            }
            if (++idx[k] <= hi) break;
            idx[k] = lo;
        }
    }

    double rest = weights_accum.empty() ? 0.0 : stable_sum(weights_accum);
    if (rest > 1.0)
        raise(ErrorCode::NegativeResidual,
              "point-estimate mass " + std::to_string(rest) + " exceeds one");
    atoms.push_back({Point(d, 0.0), 1.0 - rest});

    // continuity modulus evaluated at t, smallest available bound
    auto kappa = [&](double t) -> double {
        double v = std::numeric_limits<double>::infinity();
        if (spec.lipschitz_L) v = std::min(v, *spec.lipschitz_L * t);
        if (spec.modulus) v = std::min(v, (*spec.modulus)(t));
        if (!std::isfinite(v))
            raise(ErrorCode::InvalidArgument, "density needs a Lipschitz constant or modulus");
        return v;
    };

    DiscretizationResult out;
    out.measure = normalize_merge(d, std::move(atoms));
    const double dn = static_cast<double>(d) / n;
    const double tail = spec.m_theta / std::pow(static_cast<double>(m), spec.theta - 1.0);
    const bool bounded = spec.support_radius && m >= static_cast<int>(std::floor(*spec.support_radius)) + 1;
    switch (mode) {
    case GridMode::exact_cells:
        out.w1_bound = bounded ? dn : dn + tail;
        out.kind = BoundKind::exact_cells_dn;
        break;
    case GridMode::point_estimate:
        if (bounded) {
            double R0 = *spec.support_radius;
            out.w1_bound =
                dn + std::pow(2.0, d) * d * std::pow(R0 + 1.0, d + 1) * kappa(dn);
            out.kind = BoundKind::bounded_support_eps_n;
        } else {
            out.w1_bound =
                dn + tail + std::pow(2.0, d) * d * std::pow(static_cast<double>(m), d + 1) * kappa(dn);
            out.kind = BoundKind::uniform_eps_mn;
        }
        break;
    case GridMode::cell_min: {
        // all j in 1..m are evaluated and the smallest bound kept
        double best = std::numeric_limits<double>::infinity();
        for (int j = 1; j <= m; ++j) {
            double v = std::pow(2.0, d) * d * std::pow(static_cast<double>(j), d + 1) * kappa(dn) +
                       4.0 * spec.m_theta / std::pow(static_cast<double>(j), spec.theta - 1.0);
            best = std::min(best, v);
        }
        out.w1_bound = dn + tail + best;
        out.kind = BoundKind::cellmin_tau_mn;
        break;
    }
    }
    out.provenance = {{"n", static_cast<double>(n)},
                      {"m", static_cast<double>(m)},
                      {"mode", static_cast<double>(static_cast<int>(mode))}};
    return out;
}

// ---------------------------------------------------------------------------
// 1D hat-function discretization: each atom x in [k/n, (k+1)/n) splits onto
// the two surrounding grid points with weights 1-frac and frac.  Preserves
// the mean exactly, preserves potentials at grid points, and the output
// dominates the input in convex order.

inline DiscretizationResult dolinsky_soner_1d(const DiscreteMeasure& mu, int n) {
    if (mu.dim != 1) raise(ErrorCode::DimensionMismatch, "dolinsky_soner_1d needs d = 1");
    if (n < 1) raise(ErrorCode::InvalidArgument, "n must be >= 1");
    mu.validate();
    std::vector<Atom> atoms;
    atoms.reserve(2 * mu.size());
    for (const auto& a : mu.atoms) {
        double v = static_cast<double>(n) * a.x[0];
        long long k = discdetail::grid_floor(v);
        double frac = v - static_cast<double>(k);
        if (frac < 0.0) frac = 0.0;
        if (frac > 1.0) frac = 1.0;
        double x0 = static_cast<double>(k) / n;
        double x1 = static_cast<double>(k + 1) / n;
        if (frac < 1.0) atoms.push_back({Point{x0}, a.w * (1.0 - frac)});
        if (frac > 0.0) atoms.push_back({Point{x1}, a.w * frac});
    }
    DiscretizationResult out;
    out.measure = normalize_merge(1, std::move(atoms));
    out.w1_bound = 1.0 / n;
    out.kind = BoundKind::dolinsky_soner_1_over_n;
    out.provenance = {{"n", static_cast<double>(n)}};
    return out;
}

// Adaptive Simpson quadrature, used for the density-input variant below and
// by the builtin density normalizations.
namespace quad {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_rec(const std::function<double(double)>& f, double a, double b, double fa,
                           double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = simpson(f, a, m, fa, flm, fm);
    double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int depth = 48) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    double whole = simpson(f, a, b, fa, fm, fb);
    return adaptive_rec(f, a, b, fa, fm, fb, whole, tol, depth);
}

} // namespace quad

// Density-input variant: hat-function integrals int (1 - |n y - k|) rho(y) dy
// computed by adaptive quadrature on the two half-cells.
inline DiscretizationResult
dolinsky_soner_density(const std::function<double(double)>& rho, double lo, double hi, int n,
                       double tol = 1e-13) {
    if (n < 1 || !(hi > lo)) raise(ErrorCode::InvalidArgument, "bad dolinsky_soner_density args");
    long long klo = discdetail::grid_floor(lo * n);
    long long khi = discdetail::grid_floor(hi * n) + 1;
    std::vector<Atom> atoms;
    for (long long k = klo; k <= khi; ++k) {
        auto hat = [&](double y) {
            double t = 1.0 - std::abs(n * y - static_cast<double>(k));
            return t > 0.0 ? t * rho(y) : 0.0;
        };
        double a = std::max(lo, (static_cast<double>(k) - 1.0) / n);
        double b = std::min(hi, (static_cast<double>(k) + 1.0) / n);
        if (b <= a) continue;
        double mid = std::min(std::max(static_cast<double>(k) / n, a), b);
        double w = quad::integrate(hat, a, mid, tol) + quad::integrate(hat, mid, b, tol);
        if (w > 0.0) atoms.push_back({Point{static_cast<double>(k) / n}, w});
    }
    DiscretizationResult out;
    out.measure = normalize_merge(1, std::move(atoms));
    out.w1_bound = 1.0 / n;
    out.kind = BoundKind::dolinsky_soner_1_over_n;
    out.provenance = {{"n", static_cast<double>(n)}, {"quad_tol", tol}};
    return out;
}

// ---------------------------------------------------------------------------
// Fournier-Guillin rate chi(n) = N C(theta,d) rate(n) with the explicit
// appendix constants.

struct RateConstants {
    double theta = 2.0;
    int d = 1;
    double m_theta = 1.0;
    int n_marginals = 1;
    double c_theta_d = 0.0;
};

// Case-dependent decay factor of the empirical-measure rate.
inline double chi_rate_factor(std::int64_t n, double theta, int d) {
    if (!(theta > 1.0)) raise(ErrorCode::InvalidCase, "theta must exceed 1");
    if (n < 1) raise(ErrorCode::InvalidArgument, "n must be >= 1");
    const double nn = static_cast<double>(n);
    const double logn = std::log(nn);
    if (d == 1) {
        if (theta < 2.0) return std::pow(nn, 1.0 / theta - 1.0);
        if (theta == 2.0) return (1.0 + logn) / std::sqrt(nn);
        return 1.0 / std::sqrt(nn);
    }
    if (d == 2) {
        if (theta < 2.0) return std::pow(nn, 1.0 / theta - 1.0);
        if (theta == 2.0) return (1.0 + logn * logn) / std::sqrt(nn);
        return (1.0 + logn) / std::sqrt(nn);
    }
    const double crit = static_cast<double>(d) / (d - 1.0);
    if (theta < crit) return std::pow(nn, 1.0 / theta - 1.0);
    if (theta == crit) return (1.0 + logn) * std::pow(nn, -1.0 / d);
    return std::pow(nn, -1.0 / d);
}

// The product constant 24 (M_theta + 1) d^{(1-theta)/2} 2^theta (9 / 2 ln 2)
// times the per-case inner-sum coefficient.
inline double chi_c_constant(double theta, int d, double m_theta) {
    if (!(theta > 1.0)) raise(ErrorCode::InvalidCase, "theta must exceed 1");
    if (d < 1) raise(ErrorCode::InvalidArgument, "d must be >= 1");
    double pre = 24.0 * (m_theta + 1.0) * std::pow(static_cast<double>(d), (1.0 - theta) / 2.0) *
                 std::pow(2.0, theta) * (9.0 / (2.0 * std::log(2.0)));
    double coef = 0.0;
    if (d == 1) {
        if (theta < 2.0)
            coef = 2.0 * std::sqrt(2.0) /
                   ((std::pow(2.0, 1.0 - theta / 2.0) - 1.0) * (1.0 - std::pow(2.0, 1.0 - theta)));
        else if (theta == 2.0)
            coef = 4.0;
        else
            coef = 1.0 / (1.0 - std::pow(2.0, 1.0 - theta / 2.0));
    } else if (d == 2) {
        if (theta < 2.0) {
            double t = std::pow(2.0, 1.0 - theta / 2.0) - 1.0;
            coef = 7.0 / (t * t);
        } else if (theta == 2.0) {
            coef = 6.0;
        } else {
            coef = 1.0 / (1.0 - std::pow(2.0, 1.0 - theta / 2.0));
        }
    } else {
        const double crit = static_cast<double>(d) / (d - 1.0);
        const double expo = 1.0 - theta * (1.0 - 1.0 / d);
        if (theta < crit)
            coef = 3.0 / ((std::pow(2.0, expo) - 1.0) * (1.0 - std::pow(2.0, 1.0 - theta)));
        else if (theta == crit)
            coef = 6.0;
        else
            coef = 1.0 / (1.0 - std::pow(2.0, expo));
    }
    return pre * coef;
}

inline RateConstants make_rate_constants(double theta, int d, double m_theta, int n_marginals) {
    RateConstants rc{theta, d, m_theta, n_marginals, chi_c_constant(theta, d, m_theta)};
    return rc;
}

inline double chi_rate(std::int64_t n, const RateConstants& consts) {
    double c = consts.c_theta_d > 0.0 ? consts.c_theta_d
                                      : chi_c_constant(consts.theta, consts.d, consts.m_theta);
    return consts.n_marginals * c * chi_rate_factor(n, consts.theta, consts.d);
}

// ---------------------------------------------------------------------------
// Empirical measure from a seeded sampler: n i.i.d. draws, duplicate points
// aggregated so weights are exact multiples of 1/n.

inline DiscretizationResult empirical_discretize(const SamplerSpec& spec, int n,
                                                 std::uint64_t seed) {
    if (n < 1) raise(ErrorCode::InvalidArgument, "n must be >= 1");
    if (!spec.draw) raise(ErrorCode::InvalidArgument, "sampler missing");
    validate_spec(MarginalSpec{spec});
    CounterRng rng(seed);
    std::map<Point, int> counts;
    for (int i = 0; i < n; ++i) {
        Point x = spec.draw(rng);
        if (static_cast<int>(x.size()) != spec.dim)
            raise(ErrorCode::SamplerFailure, "draw returned wrong dimension");
        if (!point_is_finite(x)) raise(ErrorCode::SamplerFailure, "draw returned non-finite point");
        counts[x] += 1;
    }
    std::vector<Atom> atoms;
    atoms.reserve(counts.size());
    for (const auto& [x, c] : counts)
        atoms.push_back({x, static_cast<double>(c) / n});
    DiscreteMeasure m{spec.dim, std::move(atoms)};
    m.validate();

    DiscretizationResult out;
    out.measure = std::move(m);
    RateConstants rc = make_rate_constants(spec.theta, spec.dim, spec.m_theta, 1);
    out.w1_bound = chi_rate(n, rc);
    out.kind = BoundKind::empirical_chi;
    out.stochastic = true;
    out.provenance = {{"n", static_cast<double>(n)},
                      {"seed", static_cast<double>(seed)},
                      {"theta", spec.theta},
                      {"m_theta", spec.m_theta}};
    out.rng_id = kRngAlgorithmId;
    return out;
}

// ---------------------------------------------------------------------------
// Summability diagnostic for the random-discretization schedule: partial sums
// of chi(n_hat_m)/eps_m and the tail ratio of consecutive terms.  Asymptotic
// summability cannot be certified from finitely many terms; the flag is a
// heuristic.

struct ScheduleReport {
    double partial_sum = 0.0;
    std::vector<double> tail_ratios;
    double max_tail_ratio = 0.0;
    bool summable_likely = false;
    std::string note;
};

inline ScheduleReport validate_schedule(const std::vector<double>& eps,
                                        const std::vector<std::int64_t>& n_hat,
                                        const RateConstants& consts, int horizon) {
    std::size_t len = std::min(eps.size(), n_hat.size());
    if (horizon > 0) len = std::min(len, static_cast<std::size_t>(horizon));
    if (len < 4) raise(ErrorCode::InvalidArgument, "schedule too short to diagnose");
    for (std::size_t i = 0; i < len; ++i) {
        if (!(eps[i] > 0.0) || n_hat[i] < 1)
            raise(ErrorCode::InvalidArgument, "schedule entries must be positive");
        if (i > 0 && eps[i] > eps[i - 1] + 1e-15)
            raise(ErrorCode::InvalidArgument, "eps sequence must be non-increasing");
    }
    std::vector<double> terms(len);
    for (std::size_t i = 0; i < len; ++i) terms[i] = chi_rate(n_hat[i], consts) / eps[i];

    ScheduleReport rep;
    rep.partial_sum = stable_sum(terms);
    std::size_t tail_from = len / 2;
    for (std::size_t i = tail_from; i + 1 < len; ++i)
        rep.tail_ratios.push_back(terms[i + 1] / terms[i]);
    rep.max_tail_ratio = 0.0;
    for (double r : rep.tail_ratios) rep.max_tail_ratio = std::max(rep.max_tail_ratio, r);
    rep.summable_likely = !rep.tail_ratios.empty() && rep.max_tail_ratio < 1.0;
    rep.note = "heuristic: ratio test over the tail window, not a proof of summability";
    return rep;
}

} // namespace motlp
