#pragma once

// Pipeline orchestration: instances, relaxation schedules derived from
// certified Wasserstein bounds, relaxed solves with defect diagnostics, the
// one-step rate and stability bounds, and convergence sweeps.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "motlp/discretization.hpp"
#include "motlp/errors.hpp"
#include "motlp/lp.hpp"
#include "motlp/measures.hpp"
#include "motlp/transport_plan.hpp"
#include "motlp/wasserstein.hpp"

namespace motlp {

struct MOTInstance {
    int n_marginals = 2;
    int dim = 1;
    std::vector<MarginalSpec> marginal_specs;
    CostEval cost;
    std::string cost_tag; // builtin tag or free-form label
    double lipschitz_c = 0.0;
    std::optional<double> dyy_bound; // sup |d2c/dy2| for the rate bound

    void validate() const {
        if (n_marginals < 2) raise(ErrorCode::InvalidArgument, "need at least two marginals");
        if (dim < 1) raise(ErrorCode::InvalidArgument, "dimension must be >= 1");
        if (!cost) raise(ErrorCode::InvalidArgument, "cost evaluator missing");
        if (!(lipschitz_c >= 0.0)) raise(ErrorCode::InvalidArgument, "negative Lipschitz constant");
        if (!marginal_specs.empty() &&
            static_cast<int>(marginal_specs.size()) != n_marginals)
            raise(ErrorCode::InvalidArgument, "marginal count mismatch");
    }
};

struct RelaxationEntry {
    int n = 0;
    double eps = 0.0;
    std::vector<DiscretizationResult> marginals;
};

struct RelaxationSchedule {
    std::vector<RelaxationEntry> entries;

    // eps must dominate the summed per-marginal bounds and decrease along the
    // schedule.
    void validate() const {
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& e : entries) {
            if (!(e.eps >= 0.0)) raise(ErrorCode::InvalidArgument, "negative eps");
            std::vector<double> bounds;
            for (const auto& r : e.marginals) bounds.push_back(r.w1_bound);
            double sum = bounds.empty() ? 0.0 : stable_sum(bounds);
            if (e.eps < sum - 1e-12)
                raise(ErrorCode::InvalidArgument,
                      "entry eps " + std::to_string(e.eps) + " below bound sum " +
                          std::to_string(sum));
            if (e.eps > prev + 1e-12)
                raise(ErrorCode::InvalidArgument, "eps sequence must decrease");
            prev = e.eps;
        }
    }
};

struct EpsBound {
    double eps = 0.0;
    bool stochastic = false;
};

// eps_n >= r_n: any upper bound on the summed per-marginal W1 distances works.
inline EpsBound epsilon_from_bounds(const std::vector<DiscretizationResult>& results) {
    EpsBound out;
    std::vector<double> terms;
    for (const auto& r : results) {
        if (!std::isfinite(r.w1_bound)) raise(ErrorCode::InvalidArgument, "non-finite bound");
        terms.push_back(r.w1_bound);
        out.stochastic = out.stochastic || r.stochastic;
    }
    out.eps = terms.empty() ? 0.0 : stable_sum(terms);
    return out;
}

// Sum over steps of E | E[S_{k+1} | F_k] - S_k | in l1, computed exactly on
// the finite support by grouping plan mass over prefixes.
inline double martingale_defect(const TransportPlan& plan) {
    plan.validate();
    const int N = plan.n_marginals();
    const int d = plan.dim;
    std::vector<double> step_terms;
    for (int k = 0; k + 1 < N; ++k) {
        // prefix key: flattened (i_0..i_k) by mixed radix over support sizes
        std::map<std::vector<std::int32_t>, std::vector<double>> drift;
        for (const auto& [idx, w] : plan.mass) {
            std::vector<std::int32_t> key(idx.begin(), idx.begin() + k + 1);
            auto& acc = drift.try_emplace(std::move(key), std::vector<double>(d, 0.0))
                            .first->second;
            const Point& xk = plan.supports[k][idx[k]];
            const Point& xk1 = plan.supports[k + 1][idx[k + 1]];
            for (int j = 0; j < d; ++j) acc[j] += w * (xk1[j] - xk[j]);
        }
        for (const auto& [key, acc] : drift) step_terms.push_back(l1_norm(acc));
    }
    return step_terms.empty() ? 0.0 : stable_sum(step_terms);
}

struct RelaxedSolution {
    LPStatus status = LPStatus::infeasible;
    double value = -std::numeric_limits<double>::infinity();
    std::optional<TransportPlan> plan;
    double defect = 0.0;
    std::int64_t lp_vars = 0;
    std::int64_t lp_rows = 0;
    std::int64_t iterations = 0;
    double gap = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
};

// Solve P_eps on the given discretized marginals.  Infeasibility is a value
// (-inf sentinel), not an exception.
inline RelaxedSolution solve_relaxed(const MOTInstance& instance,
                                     const std::vector<DiscreteMeasure>& discretized, double eps,
                                     const SolveOptions& opt = {}) {
    instance.validate();
    if (static_cast<int>(discretized.size()) != instance.n_marginals)
        raise(ErrorCode::InvalidArgument, "marginal count mismatch");
    for (const auto& m : discretized)
        if (m.dim != instance.dim) raise(ErrorCode::DimensionMismatch, "marginal dimension");
    LPModel model = build_relaxed_mot_lp(discretized, instance.cost, eps);
    LPSolution sol = solve(model, opt);

    RelaxedSolution out;
    out.status = sol.status;
    out.lp_vars = model.num_vars;
    out.lp_rows = model.num_rows();
    out.iterations = sol.iterations;
    if (sol.status != LPStatus::optimal) {
        out.value = sol.objective_value;
        return out;
    }
    out.value = sol.objective_value;
    out.gap = duality_gap(sol, model);
    out.primal_residual = sol.primal_residual;
    out.dual_residual = sol.dual_residual;
    out.plan = extract_plan(model, sol, discretized);
    out.defect = martingale_defect(*out.plan);
    if (out.defect > eps + 1e-9)
        raise(ErrorCode::NumericalFailure, "plan defect exceeds the eps budget");
    return out;
}

// ---------------------------------------------------------------------------
// Rate bound of the one-step 1D model:
//   lambda(R) = (R+1) eps + int_{|y|>R} (|y|-R)^2 nu(dy), minimized over R.

inline std::vector<double> default_radius_grid(const DiscreteMeasure& nu) {
    std::vector<double> grid{0.0};
    for (const auto& a : nu.atoms) grid.push_back(std::abs(a.x[0]));
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

inline double tail_square(const DiscreteMeasure& nu, double R) {
    std::vector<double> terms;
    for (const auto& a : nu.atoms) {
        double ay = std::abs(a.x[0]);
        if (ay > R) terms.push_back(a.w * (ay - R) * (ay - R));
    }
    return terms.empty() ? 0.0 : stable_sum(terms);
}

struct RateBound {
    double value = 0.0;
    double argmin_R = 0.0;
};

inline RateBound rate_bound_lambda(double eps, const DiscreteMeasure& nu,
                                   std::vector<double> R_grid = {}) {
    if (nu.dim != 1) raise(ErrorCode::DimensionMismatch, "rate bound needs d = 1");
    if (!(eps >= 0.0)) raise(ErrorCode::InvalidArgument, "eps must be >= 0");
    nu.validate();
    if (R_grid.empty()) R_grid = default_radius_grid(nu);
    RateBound best{std::numeric_limits<double>::infinity(), 0.0};
    for (double R : R_grid) {
        double v = (R + 1.0) * eps + tail_square(nu, R);
        if (v < best.value) best = {v, R};
    }
    return best;
}

// Stability bound between two problem instances:
//   min_R [(R+1) W((mu',nu'),(mu,nu)) + tails of both nu] + (L/2) |m2(nu')-m2(nu)|.
// The multiplicative constant of the first part is unknown; the value is a
// shape, not an absolute certificate.
inline double stability_bound(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              const DiscreteMeasure& mu2, const DiscreteMeasure& nu2,
                              std::vector<double> R_grid = {}, double l_cost = 1.0) {
    for (const auto* m : {&mu, &nu, &mu2, &nu2})
        if (m->dim != 1) raise(ErrorCode::DimensionMismatch, "stability bound needs d = 1");
    double wsum = w1_1d(mu, mu2).value + w1_1d(nu, nu2).value;
    if (R_grid.empty()) {
        R_grid = default_radius_grid(nu);
        for (double r : default_radius_grid(nu2)) R_grid.push_back(r);
        std::sort(R_grid.begin(), R_grid.end());
        R_grid.erase(std::unique(R_grid.begin(), R_grid.end()), R_grid.end());
    }
    double best = std::numeric_limits<double>::infinity();
    for (double R : R_grid) {
        double v = (R + 1.0) * wsum + tail_square(nu, R) + tail_square(nu2, R);
        best = std::min(best, v);
    }
    double m2_nu = moments(nu, 2.0).second_moment;
    double m2_nu2 = moments(nu2, 2.0).second_moment;
    return best + 0.5 * l_cost * std::abs(m2_nu2 - m2_nu);
}

// ---------------------------------------------------------------------------
// Convergence sweep across a relaxation schedule.

struct SweepEntryResult {
    int n = 0;
    double eps = 0.0;
    LPStatus status = LPStatus::infeasible;
    bool solved = false;
    double value = -std::numeric_limits<double>::infinity();
    double defect = 0.0;
    double wall_ms = 0.0;
    std::int64_t lp_vars = 0;
    std::int64_t lp_rows = 0;
    std::int64_t iterations = 0;
    std::string error;
    std::optional<TransportPlan> plan;
};

struct ConvergenceReport {
    std::vector<SweepEntryResult> entries;
    int ref_index = -1;      // finest entry, used as the reference value
    double ref_value = 0.0;  // numerical proxy for the continuum value
    // per-entry diagnostics against the reference
    std::vector<double> fitted_c;      // |value - ref| / eps
    std::vector<bool> sandwich_ok;     // ref <= value + Lip(c) eps + 1e-6
};

inline ConvergenceReport sweep(const MOTInstance& instance, const RelaxationSchedule& schedule,
                               const SolveOptions& opt = {}, int jobs = 1, bool keep_plans = false) {
    instance.validate();
    schedule.validate();
    const int n_entries = static_cast<int>(schedule.entries.size());
    ConvergenceReport rep;
    rep.entries.resize(n_entries);

    auto run_one = [&](int i) {
        const auto& entry = schedule.entries[i];
        SweepEntryResult& r = rep.entries[i];
        r.n = entry.n;
        r.eps = entry.eps;
        auto t0 = std::chrono::steady_clock::now();
        try {
            std::vector<DiscreteMeasure> marginals;
            for (const auto& dr : entry.marginals) marginals.push_back(dr.measure);
            RelaxedSolution sol = solve_relaxed(instance, marginals, entry.eps, opt);
            r.status = sol.status;
            r.solved = true;
            r.value = sol.value;
            r.defect = sol.defect;
            r.lp_vars = sol.lp_vars;
            r.lp_rows = sol.lp_rows;
            r.iterations = sol.iterations;
            if (keep_plans) r.plan = std::move(sol.plan);
        } catch (const Error& e) {
            r.error = e.what();
        }
        auto t1 = std::chrono::steady_clock::now();
        r.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    };

    if (jobs <= 1 || n_entries <= 1) {
        for (int i = 0; i < n_entries; ++i) run_one(i);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= n_entries) return;
                run_one(i);
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min(jobs, n_entries); ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // reference: the finest (largest n) optimal entry
    for (int i = 0; i < n_entries; ++i) {
        const auto& r = rep.entries[i];
        if (r.solved && r.status == LPStatus::optimal) {
            if (rep.ref_index < 0 || r.n >= rep.entries[rep.ref_index].n) rep.ref_index = i;
        }
    }
    if (rep.ref_index >= 0) {
        rep.ref_value = rep.entries[rep.ref_index].value;
        for (int i = 0; i < n_entries; ++i) {
            const auto& r = rep.entries[i];
            bool ok = r.solved && r.status == LPStatus::optimal;
            rep.fitted_c.push_back(ok && r.eps > 0.0 ? std::abs(r.value - rep.ref_value) / r.eps
                                                     : 0.0);
            rep.sandwich_ok.push_back(
                ok ? rep.ref_value <= r.value + instance.lipschitz_c * r.eps + 1e-6 : false);
        }
    }
    return rep;
}

} // namespace motlp
