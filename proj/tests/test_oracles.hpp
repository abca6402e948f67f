#pragma once

// Test-only oracles, independent of the simplex path they are used to check:
// a dense brute-force vertex enumerator for small LPs and generators for
// convex-ordered measure pairs built from mean-preserving dyadic spreads.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "motlp/lp.hpp"
#include "motlp/measures.hpp"
#include "motlp/rng.hpp"

namespace motlp::testing {

struct DenseStdLP {
    std::vector<std::vector<double>> A; // equalities, row-major
    std::vector<double> b;
    std::vector<double> c; // maximize
    std::size_t n = 0;
};

inline DenseStdLP standardize(const LPModel& model) {
    DenseStdLP s;
    std::size_t m = model.num_rows();
    std::size_t nslack = 0;
    for (char sn : model.sense)
        if (sn != '=') ++nslack;
    s.n = static_cast<std::size_t>(model.num_vars) + nslack;
    s.A.assign(m, std::vector<double>(s.n, 0.0));
    s.b.assign(m, 0.0);
    s.c.assign(s.n, 0.0);
    for (std::int64_t j = 0; j < model.num_vars; ++j) s.c[j] = model.objective[j];
    std::size_t slack = model.num_vars;
    for (std::size_t r = 0; r < m; ++r) {
        for (std::int64_t k = model.row_start[r]; k < model.row_start[r + 1]; ++k)
            s.A[r][model.col_idx[k]] += model.vals[k];
        s.b[r] = model.rhs[r];
        if (model.sense[r] == '<') s.A[r][slack++] = 1.0;
        else if (model.sense[r] == '>') s.A[r][slack++] = -1.0;
    }
    return s;
}

// Row rank and an independent row subset via Gauss elimination with partial
// pivoting on a copy.
inline std::vector<std::size_t> independent_rows(const DenseStdLP& s, double tol = 1e-10) {
    std::size_t m = s.A.size();
    std::vector<std::vector<double>> w = s.A;
    std::vector<std::size_t> rows;
    std::vector<char> used(m, 0);
    for (std::size_t col = 0; col < s.n && rows.size() < m; ++col) {
        std::size_t piv = m;
        double best = tol;
        for (std::size_t r = 0; r < m; ++r)
            if (!used[r] && std::abs(w[r][col]) > best) {
                best = std::abs(w[r][col]);
                piv = r;
            }
        if (piv == m) continue;
        used[piv] = 1;
        rows.push_back(piv);
        for (std::size_t r = 0; r < m; ++r) {
            if (r == piv || std::abs(w[r][col]) <= 0.0) continue;
            double f = w[r][col] / w[piv][col];
            for (std::size_t cc = col; cc < s.n; ++cc) w[r][cc] -= f * w[piv][cc];
        }
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

inline bool solve_square(std::vector<std::vector<double>> A, std::vector<double> b,
                         std::vector<double>& x, double tol = 1e-10) {
    std::size_t n = A.size();
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t piv = k;
        for (std::size_t r = k + 1; r < n; ++r)
            if (std::abs(A[r][k]) > std::abs(A[piv][k])) piv = r;
        if (std::abs(A[piv][k]) < tol) return false;
        std::swap(A[piv], A[k]);
        std::swap(b[piv], b[k]);
        for (std::size_t r = k + 1; r < n; ++r) {
            double f = A[r][k] / A[k][k];
            if (f == 0.0) continue;
            for (std::size_t c = k; c < n; ++c) A[r][c] -= f * A[k][c];
            b[r] -= f * b[k];
        }
    }
    x.assign(n, 0.0);
    for (std::size_t k = n; k-- > 0;) {
        double acc = b[k];
        for (std::size_t c = k + 1; c < n; ++c) acc -= A[k][c] * x[c];
        x[k] = acc / A[k][k];
    }
    return true;
}

// Enumerate all basic solutions of the standardized system and maximize.
// Returns nullopt when no feasible basic solution exists.
inline std::optional<double> brute_force_lp_max(const LPModel& model, double feas_tol = 1e-8) {
    DenseStdLP s = standardize(model);
    std::vector<std::size_t> rows = independent_rows(s);
    std::size_t r = rows.size();
    std::optional<double> best;

    std::vector<std::size_t> comb(r);
    for (std::size_t i = 0; i < r; ++i) comb[i] = i;
    if (s.n < r) return std::nullopt;
    while (true) {
        std::vector<std::vector<double>> B(r, std::vector<double>(r, 0.0));
        std::vector<double> rb(r, 0.0);
        for (std::size_t i = 0; i < r; ++i) {
            rb[i] = s.b[rows[i]];
            for (std::size_t jj = 0; jj < r; ++jj) B[i][jj] = s.A[rows[i]][comb[jj]];
        }
        std::vector<double> xb;
        if (solve_square(B, rb, xb)) {
            bool ok = true;
            for (double v : xb)
                if (v < -feas_tol) {
                    ok = false;
                    break;
                }
            if (ok) {
                std::vector<double> x(s.n, 0.0);
                for (std::size_t jj = 0; jj < r; ++jj) x[comb[jj]] = std::max(0.0, xb[jj]);
                // the full system must hold, not only the independent rows
                for (std::size_t rr = 0; rr < s.A.size() && ok; ++rr) {
                    double acc = -s.b[rr];
                    for (std::size_t c = 0; c < s.n; ++c) acc += s.A[rr][c] * x[c];
                    if (std::abs(acc) > feas_tol) ok = false;
                }
                if (ok) {
                    double obj = 0.0;
                    for (std::size_t c = 0; c < s.n; ++c) obj += s.c[c] * x[c];
                    if (!best || obj > *best) best = obj;
                }
            }
        }
        // next combination
        std::size_t i = r;
        while (i-- > 0) {
            if (comb[i] != i + s.n - r) {
                ++comb[i];
                for (std::size_t j2 = i + 1; j2 < r; ++j2) comb[j2] = comb[j2 - 1] + 1;
                break;
            }
            if (i == 0) return best;
        }
        if (r == 0) return best;
    }
}

// ---------------------------------------------------------------------------
// Convex-ordered pairs by construction: repeated two-point mean-preserving
// spreads with dyadic offsets, so means match to rounding.

inline DiscreteMeasure random_dyadic_measure(CounterRng& rng, int max_atoms) {
    std::vector<Atom> a;
    int n = 1 + static_cast<int>(rng.next_u64() % max_atoms);
    for (int i = 0; i < n; ++i) {
        double x = static_cast<double>(static_cast<int>(rng.next_u64() % 33)) / 8.0 - 2.0;
        double w = (1.0 + static_cast<double>(rng.next_u64() % 15)) / 16.0;
        a.push_back({Point{x}, w});
    }
    return normalize_merge(1, a);
}

inline DiscreteMeasure spread_once(const DiscreteMeasure& mu, CounterRng& rng) {
    std::vector<Atom> out;
    std::size_t pick = rng.next_u64() % mu.size();
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const auto& at = mu.atoms[i];
        if (i != pick) {
            out.push_back(at);
            continue;
        }
        double a = (1.0 + static_cast<double>(rng.next_u64() % 8)) / 8.0;
        double b = (1.0 + static_cast<double>(rng.next_u64() % 8)) / 8.0;
        out.push_back({Point{at.x[0] - a}, at.w * b / (a + b)});
        out.push_back({Point{at.x[0] + b}, at.w * a / (a + b)});
    }
    return normalize_merge(1, out);
}

// Returns (mu, nu) with mu convex-dominated by nu.
inline std::pair<DiscreteMeasure, DiscreteMeasure> random_convex_ordered_pair(CounterRng& rng,
                                                                              int max_atoms = 5,
                                                                              int max_spreads = 3) {
    DiscreteMeasure mu = random_dyadic_measure(rng, max_atoms);
    DiscreteMeasure nu = mu;
    int spreads = 1 + static_cast<int>(rng.next_u64() % max_spreads);
    for (int s = 0; s < spreads; ++s) nu = spread_once(nu, rng);
    return {mu, nu};
}

} // namespace motlp::testing
