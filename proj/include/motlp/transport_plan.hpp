#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "motlp/measures.hpp"

namespace motlp {

// Joint measure on (R^d)^N supported on the product of finite marginal
// supports.  Mass is stored sparsely as (multi-index, weight) pairs sorted
// lexicographically; indices refer into `supports`.
struct TransportPlan {
    int dim = 0;
    std::vector<std::vector<Point>> supports;
    std::vector<std::pair<std::vector<std::int32_t>, double>> mass;

    int n_marginals() const { return static_cast<int>(supports.size()); }

    double total_mass() const {
        std::vector<double> ws;
        ws.reserve(mass.size());
        for (const auto& [idx, w] : mass) ws.push_back(w);
        return ws.empty() ? 0.0 : stable_sum(ws);
    }

    // Weights of the pushforward onto marginal k, aligned with supports[k].
    std::vector<double> pushforward(int k) const {
        std::vector<double> w(supports[k].size(), 0.0);
        for (const auto& [idx, m] : mass) w[idx[k]] += m;
        return w;
    }

    DiscreteMeasure marginal(int k) const {
        std::vector<double> w = pushforward(k);
        std::vector<Atom> atoms;
        for (std::size_t i = 0; i < w.size(); ++i)
            if (w[i] > 0.0) atoms.push_back({supports[k][i], w[i]});
        return normalize_merge(dim, std::move(atoms));
    }

    void validate(double tol = 1e-9) const {
        if (supports.empty()) raise(ErrorCode::InvalidMeasure, "plan has no marginals");
        for (const auto& [idx, w] : mass) {
            if (!(w >= 0.0)) raise(ErrorCode::InvalidMeasure, "negative plan weight");
            if (idx.size() != supports.size())
                raise(ErrorCode::InvalidMeasure, "plan index arity mismatch");
        }
        if (std::abs(total_mass() - 1.0) > tol)
            raise(ErrorCode::InvalidMeasure, "plan mass does not sum to one");
    }

    // Max deviation of the pushforward from the given marginal weights,
    // which must be aligned with supports[k].
    double marginal_residual(int k, const std::vector<double>& weights) const {
        std::vector<double> w = pushforward(k);
        double r = 0.0;
        for (std::size_t i = 0; i < w.size(); ++i) r = std::max(r, std::abs(w[i] - weights[i]));
        return r;
    }
};

} // namespace motlp
