#pragma once

// Wasserstein-1 distance between finitely supported measures: the exact
// quantile coupling in dimension one, the transport LP in general dimension,
// and the product metric summing per-marginal distances.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "motlp/errors.hpp"
#include "motlp/lp.hpp"
#include "motlp/measures.hpp"
#include "motlp/transport_plan.hpp"

namespace motlp {

struct WassersteinResult {
    double value = 0.0;
    std::optional<TransportPlan> coupling;
};

namespace wsdetail {

inline TransportPlan make_pair_plan(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                    std::vector<std::pair<std::vector<std::int32_t>, double>> mass) {
    TransportPlan plan;
    plan.dim = mu.dim;
    plan.supports.resize(2);
    for (const auto& a : mu.atoms) plan.supports[0].push_back(a.x);
    for (const auto& a : nu.atoms) plan.supports[1].push_back(a.x);
    std::sort(mass.begin(), mass.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    plan.mass = std::move(mass);
    return plan;
}

} // namespace wsdetail

// Exact 1D distance via the monotone (quantile) coupling: merge the sorted
// cumulative-weight breakpoints of both measures and pay |x - y| on each
// overlap.  Atoms arrive sorted from normalize_merge.
inline WassersteinResult w1_1d(const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
    if (mu.dim != 1 || nu.dim != 1) raise(ErrorCode::DimensionMismatch, "w1_1d needs d = 1");
    mu.validate();
    nu.validate();
    std::vector<std::pair<std::vector<std::int32_t>, double>> mass;
    std::vector<double> terms;
    std::size_t i = 0, j = 0;
    double a = mu.atoms[0].w, b = nu.atoms[0].w;
    while (i < mu.size() && j < nu.size()) {
        double t = std::min(a, b);
        if (t > 0.0) {
            terms.push_back(t * std::abs(mu.atoms[i].x[0] - nu.atoms[j].x[0]));
            mass.push_back({{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)}, t});
        }
        a -= t;
        b -= t;
        if (a <= b && i + 1 <= mu.size()) {
            ++i;
            if (i < mu.size()) a = mu.atoms[i].w;
        }
        if (b == 0.0 && j + 1 <= nu.size()) {
            ++j;
            if (j < nu.size()) b = nu.atoms[j].w;
        }
    }
    WassersteinResult res;
    res.value = terms.empty() ? 0.0 : stable_sum(terms);
    res.coupling = wsdetail::make_pair_plan(mu, nu, std::move(mass));
    return res;
}

// Transport LP with the l1 ground cost, no martingale constraints.  The
// solver maximizes, so costs enter negated.
inline WassersteinResult w1_lp(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                               const SolveOptions& opt = {}) {
    if (mu.dim != nu.dim) raise(ErrorCode::DimensionMismatch, "w1_lp dimension mismatch");
    mu.validate();
    nu.validate();
    const std::int64_t nm = static_cast<std::int64_t>(mu.size());
    const std::int64_t nn = static_cast<std::int64_t>(nu.size());
    std::vector<double> obj(nm * nn, 0.0);
    for (std::int64_t i = 0; i < nm; ++i)
        for (std::int64_t j = 0; j < nn; ++j)
            obj[i * nn + j] = -l1_dist(mu.atoms[i].x, nu.atoms[j].x);

    std::vector<LPRowSpec> rows;
    rows.reserve(nm + nn);
    for (std::int64_t i = 0; i < nm; ++i) {
        LPRowSpec r;
        r.sense = '=';
        r.rhs = mu.atoms[i].w;
        for (std::int64_t j = 0; j < nn; ++j) r.entries.push_back({i * nn + j, 1.0});
        rows.push_back(std::move(r));
    }
    for (std::int64_t j = 0; j < nn; ++j) {
        LPRowSpec r;
        r.sense = '=';
        r.rhs = nu.atoms[j].w;
        for (std::int64_t i = 0; i < nm; ++i) r.entries.push_back({i * nn + j, 1.0});
        rows.push_back(std::move(r));
    }
    LPModel model = build_lp(std::move(obj), rows);
    LPSolution sol = solve(model, opt);
    if (sol.status != LPStatus::optimal)
        raise(ErrorCode::NumericalFailure,
              std::string("transport LP reported ") + lp_status_name(sol.status));

    std::vector<std::pair<std::vector<std::int32_t>, double>> mass;
    for (std::int64_t i = 0; i < nm; ++i)
        for (std::int64_t j = 0; j < nn; ++j) {
            double w = sol.primal[i * nn + j];
            if (w > 0.0)
                mass.push_back({{static_cast<std::int32_t>(i), static_cast<std::int32_t>(j)}, w});
        }
    WassersteinResult res;
    res.value = -sol.objective_value;
    if (res.value < 0.0 && res.value > -1e-12) res.value = 0.0;
    res.coupling = wsdetail::make_pair_plan(mu, nu, std::move(mass));
    return res;
}

// W1 of a pair, routed to the exact 1D algorithm when possible.
inline double w1_auto(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                      const SolveOptions& opt = {}) {
    if (mu.dim == 1 && nu.dim == 1) return w1_1d(mu, nu).value;
    return w1_lp(mu, nu, opt).value;
}

// Product metric: sum of per-pair W1 distances.
inline double w1_product(const std::vector<std::pair<DiscreteMeasure, DiscreteMeasure>>& pairs,
                         const SolveOptions& opt = {}) {
    std::vector<double> terms;
    terms.reserve(pairs.size());
    for (const auto& [mu, nu] : pairs) {
        if (mu.dim != nu.dim) raise(ErrorCode::DimensionMismatch, "w1_product pair mismatch");
        terms.push_back(w1_auto(mu, nu, opt));
    }
    return terms.empty() ? 0.0 : stable_sum(terms);
}

} // namespace motlp
