#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "motlp/errors.hpp"
#include "motlp/rng.hpp"

namespace motlp {

// State space is R^d with the l1 norm |x| = sum |x_i|.
using Point = std::vector<double>;

inline double l1_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}

inline double l1_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s;
}

// Neumaier-compensated sum; keeps weight totals well inside the 1e-12 budget.
inline double stable_sum(std::span<const double> xs) {
    double s = 0.0, comp = 0.0;
    for (double x : xs) {
        double t = s + x;
        if (std::abs(s) >= std::abs(x))
            comp += (s - t) + x;
        else
            comp += (x - t) + s;
        s = t;
    }
    return s + comp;
}

inline bool point_is_finite(const Point& p) {
    for (double v : p)
        if (!std::isfinite(v)) return false;
    return true;
}

struct Atom {
    Point x;
    double w = 0.0;
};

// Finitely supported probability measure on R^d: the common currency between
// the discretizers, the Wasserstein routines and the LP builder.
struct DiscreteMeasure {
    int dim = 0;
    std::vector<Atom> atoms;

    std::size_t size() const { return atoms.size(); }

    double total_weight() const {
        std::vector<double> ws;
        ws.reserve(atoms.size());
        for (const auto& a : atoms) ws.push_back(a.w);
        return stable_sum(ws);
    }

    // Checks all invariants: weights >= 0, total in [1-1e-12, 1+1e-12],
    // finite coordinates of declared dimension, atoms pairwise distinct.
    void validate() const {
        if (dim < 1) raise(ErrorCode::InvalidMeasure, "dimension must be >= 1");
        if (atoms.empty()) raise(ErrorCode::EmptyMeasure, "measure has no atoms");
        for (const auto& a : atoms) {
            if (static_cast<int>(a.x.size()) != dim)
                raise(ErrorCode::InvalidMeasure, "atom dimension mismatch");
            if (!point_is_finite(a.x))
                raise(ErrorCode::InvalidMeasure, "atom coordinate not finite");
            if (!(a.w >= 0.0))
                raise(ErrorCode::InvalidMeasure, "negative atom weight");
        }
        double t = total_weight();
        if (std::abs(t - 1.0) > 1e-12)
            raise(ErrorCode::InvalidMeasure, "weights sum to " + std::to_string(t));
        for (std::size_t i = 1; i < atoms.size(); ++i) {
            bool equal = true;
            for (int k = 0; k < dim; ++k)
                if (std::abs(atoms[i].x[k] - atoms[i - 1].x[k]) > 1e-12) {
                    equal = false;
                    break;
                }
            // atoms are kept sorted by normalize_merge, so duplicates are adjacent
            if (equal) raise(ErrorCode::InvalidMeasure, "duplicate atoms after merge");
        }
    }
};

inline bool lex_less(const Point& a, const Point& b) {
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] < b[k]) return true;
        if (a[k] > b[k]) return false;
    }
    return false;
}

// Merges duplicate points (1e-12 per-coordinate tolerance; discretizers emit
// exact grid rationals so the comparison is exact in practice), renormalizes
// the total weight to one and sorts the support lexicographically.
inline DiscreteMeasure normalize_merge(int dim, std::vector<Atom> raw) {
    if (raw.empty()) raise(ErrorCode::EmptyMeasure, "no atoms given");
    for (const auto& a : raw) {
        if (static_cast<int>(a.x.size()) != dim)
            raise(ErrorCode::DimensionMismatch, "atom dimension mismatch");
        if (!point_is_finite(a.x)) raise(ErrorCode::InvalidMeasure, "non-finite coordinate");
        if (!(a.w >= 0.0)) raise(ErrorCode::InvalidMeasure, "negative weight");
    }
    std::sort(raw.begin(), raw.end(),
              [](const Atom& a, const Atom& b) { return lex_less(a.x, b.x); });
    std::vector<Atom> merged;
    merged.reserve(raw.size());
    for (auto& a : raw) {
        if (!merged.empty()) {
            bool same = true;
            for (int k = 0; k < dim; ++k)
                if (std::abs(a.x[k] - merged.back().x[k]) > 1e-12) {
                    same = false;
                    break;
                }
            if (same) {
                merged.back().w += a.w;
                continue;
            }
        }
        merged.push_back(std::move(a));
    }
    std::vector<double> ws;
    ws.reserve(merged.size());
    for (const auto& a : merged) ws.push_back(a.w);
    double total = stable_sum(ws);
    if (!(total > 0.0)) raise(ErrorCode::EmptyMeasure, "total weight is zero");
    // drop exactly-zero atoms, then renormalize
    std::vector<Atom> out;
    out.reserve(merged.size());
    for (auto& a : merged)
        if (a.w > 0.0) {
            a.w /= total;
            out.push_back(std::move(a));
        }
    if (out.empty()) raise(ErrorCode::EmptyMeasure, "total weight is zero");
    DiscreteMeasure m{dim, std::move(out)};
    m.validate();
    return m;
}

inline DiscreteMeasure dirac(const Point& x) {
    return normalize_merge(static_cast<int>(x.size()), {{x, 1.0}});
}

inline DiscreteMeasure dirac1(double x) { return dirac(Point{x}); }

// Convenience for 1D test fixtures: atoms given as (position, weight) pairs.
inline DiscreteMeasure measure1d(std::vector<std::pair<double, double>> pts) {
    std::vector<Atom> atoms;
    atoms.reserve(pts.size());
    for (auto& [x, w] : pts) atoms.push_back({Point{x}, w});
    return normalize_merge(1, std::move(atoms));
}

struct MomentReport {
    std::vector<double> mean;  // componentwise E[X]
    double abs_moment = 0.0;   // E|X| in l1
    double moment_theta = 0.0; // E|X|^theta
    double second_moment = 0.0; // E|X|^2
};

inline MomentReport moments(const DiscreteMeasure& m, double theta) {
    if (theta < 1.0) raise(ErrorCode::InvalidArgument, "theta must be >= 1");
    MomentReport r;
    r.mean.assign(m.dim, 0.0);
    std::vector<double> abs_terms, theta_terms, sq_terms;
    abs_terms.reserve(m.size());
    theta_terms.reserve(m.size());
    sq_terms.reserve(m.size());
    for (const auto& a : m.atoms) {
        double nx = l1_norm(a.x);
        for (int k = 0; k < m.dim; ++k) r.mean[k] += a.w * a.x[k];
        abs_terms.push_back(a.w * nx);
        theta_terms.push_back(a.w * std::pow(nx, theta));
        sq_terms.push_back(a.w * nx * nx);
    }
    r.abs_moment = stable_sum(abs_terms);
    r.moment_theta = stable_sum(theta_terms);
    r.second_moment = stable_sum(sq_terms);
    return r;
}

inline double mean_1d(const DiscreteMeasure& m) {
    if (m.dim != 1) raise(ErrorCode::DimensionMismatch, "mean_1d needs d = 1");
    std::vector<double> terms;
    terms.reserve(m.size());
    for (const auto& a : m.atoms) terms.push_back(a.w * a.x[0]);
    return stable_sum(terms);
}

// Expected call payoff E (X - K)^+ of a 1D measure.
inline double call_price(const DiscreteMeasure& m, double strike) {
    std::vector<double> terms;
    terms.reserve(m.size());
    for (const auto& a : m.atoms)
        if (a.x[0] > strike) terms.push_back(a.w * (a.x[0] - strike));
    return terms.empty() ? 0.0 : stable_sum(terms);
}

// Potential function K -> E |K - X| of a 1D measure.
inline double potential_1d(const DiscreteMeasure& m, double k) {
    std::vector<double> terms;
    terms.reserve(m.size());
    for (const auto& a : m.atoms) terms.push_back(a.w * std::abs(k - a.x[0]));
    return stable_sum(terms);
}

// Convex order mu <= nu for finitely supported 1D measures: equal means
// (1e-9) and E(X-K)^+ under mu at most the value under nu (+1e-9) at every
// strike in the union of supports.  Sufficient and necessary at finite
// support; the d > 1 certification is routed through the LP instead.
inline bool convex_order_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != 1 || nu.dim != 1)
        raise(ErrorCode::DimensionMismatch, "convex_order_1d needs d = 1");
    if (std::abs(mean_1d(mu) - mean_1d(nu)) > 1e-9) return false;
    std::vector<double> strikes;
    strikes.reserve(mu.size() + nu.size());
    for (const auto& a : mu.atoms) strikes.push_back(a.x[0]);
    for (const auto& a : nu.atoms) strikes.push_back(a.x[0]);
    for (double k : strikes)
        if (call_price(mu, k) > call_price(nu, k) + 1e-9) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Marginal specifications: how a marginal enters the pipeline.

struct TabulatedSpec {
    DiscreteMeasure measure;
};

// Axis-aligned cell [lo_i, hi_i)^d; used by cell-minimizer oracles.
struct Cell {
    Point lo;
    Point hi;
};

struct DensitySpec {
    std::function<double(std::span<const double>)> evaluator;
    int dim = 1;
    // Support contained in [-R, R]^d when known.
    std::optional<double> support_radius;
    std::optional<double> lipschitz_L;
    // Modulus of continuity kappa(t), nondecreasing with kappa(0)=0; when both
    // a Lipschitz constant and a modulus are given the smaller bound is used.
    std::optional<std::function<double(double)>> modulus;
    double theta = 2.0;   // Assumption: theta > 1
    double m_theta = 1.0; // bound on E|X|^theta
    std::optional<std::function<Point(const Cell&)>> cell_min_oracle;
};

struct SamplerSpec {
    std::function<Point(CounterRng&)> draw;
    int dim = 1;
    double theta = 2.0;
    double m_theta = 1.0;
};

using MarginalSpec = std::variant<TabulatedSpec, DensitySpec, SamplerSpec>;

inline int spec_dim(const MarginalSpec& s) {
    if (const auto* t = std::get_if<TabulatedSpec>(&s)) return t->measure.dim;
    if (const auto* d = std::get_if<DensitySpec>(&s)) return d->dim;
    return std::get<SamplerSpec>(s).dim;
}

inline void validate_spec(const MarginalSpec& s) {
    if (const auto* t = std::get_if<TabulatedSpec>(&s)) {
        t->measure.validate();
        return;
    }
    double theta = 0.0, m_theta = 0.0;
    if (const auto* d = std::get_if<DensitySpec>(&s)) {
        theta = d->theta;
        m_theta = d->m_theta;
        if (d->lipschitz_L && *d->lipschitz_L < 0.0)
            raise(ErrorCode::InvalidArgument, "lipschitz_L must be >= 0");
    } else {
        const auto& sp = std::get<SamplerSpec>(s);
        theta = sp.theta;
        m_theta = sp.m_theta;
    }
    if (!(theta > 1.0)) raise(ErrorCode::InvalidArgument, "theta must exceed 1");
    if (!(m_theta > 0.0)) raise(ErrorCode::InvalidArgument, "m_theta must be positive");
}

} // namespace motlp
