#pragma once

// Relaxed-MOT linear programming: the slack-variable model of the
// finite-support problem, a self-contained two-phase revised primal simplex
// (PFI updates over a sparse LU of the basis), transport-plan extraction and
// LP text export.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "motlp/errors.hpp"
#include "motlp/measures.hpp"
#include "motlp/transport_plan.hpp"

namespace motlp {

using CostEval = std::function<double(std::span<const double>)>;

enum class LPStatus { optimal, infeasible, unbounded };

inline const char* lp_status_name(LPStatus s) {
    switch (s) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
    }
    return "unknown";
}

// Index bookkeeping for the relaxed-MOT model: maps a support multi-index
// (i_1..i_N) to its primal column and (k, i_1..i_k, j) to its slack column.
struct MotIndexMaps {
    std::vector<std::int32_t> sizes; // support cardinalities n(k)
    int n_marginals = 0;
    int dim = 0;
    std::int64_t d_product = 0;            // D = prod n(k)
    std::vector<std::int64_t> suffix;      // S_k = prod_{r>k} n(r)
    std::vector<std::int64_t> prefix;      // PF_k = prod_{r<=k} n(r)
    std::vector<std::int64_t> delta_start; // first column of slack block k

    std::int64_t primal_col(std::span<const std::int32_t> digits) const {
        std::int64_t f = 0;
        for (int k = 0; k < n_marginals; ++k) f = f * sizes[k] + digits[k];
        return f;
    }

    std::int64_t slack_col(int k, std::int64_t prefix_flat, int j) const {
        return delta_start[k] + prefix_flat * dim + j;
    }

    void decode(std::int64_t flat, std::int32_t* digits) const {
        for (int k = n_marginals - 1; k >= 0; --k) {
            digits[k] = static_cast<std::int32_t>(flat % sizes[k]);
            flat /= sizes[k];
        }
    }
};

// Sparse LP in row form; maximization, all variables bounded below by zero.
struct LPModel {
    std::int64_t num_vars = 0;
    std::int64_t primal_var_count = 0; // p-variables for MOT models
    std::vector<double> objective;     // length num_vars

    // rows in CSR form
    std::vector<std::int64_t> row_start;
    std::vector<std::int32_t> col_idx;
    std::vector<double> vals;
    std::vector<char> sense; // '<', '=', '>'
    std::vector<double> rhs;

    std::optional<MotIndexMaps> mot;
    std::vector<std::string> var_names; // explicit names; synthesized for MOT

    std::int64_t num_rows() const { return static_cast<std::int64_t>(rhs.size()); }
    std::int64_t nnz() const { return static_cast<std::int64_t>(vals.size()); }

    std::string var_name(std::int64_t j) const {
        if (j < static_cast<std::int64_t>(var_names.size()) && !var_names[j].empty())
            return var_names[j];
        if (mot) {
            const auto& mx = *mot;
            if (j < mx.d_product) {
                std::vector<std::int32_t> digits(mx.n_marginals);
                mx.decode(j, digits.data());
                std::string s = "p";
                for (int k = 0; k < mx.n_marginals; ++k) s += "_" + std::to_string(digits[k]);
                return s;
            }
            for (int k = mx.n_marginals - 2; k >= 0; --k) {
                if (j >= mx.delta_start[k]) {
                    std::int64_t off = j - mx.delta_start[k];
                    std::int64_t pf = off / mx.dim;
                    int jj = static_cast<int>(off % mx.dim);
                    std::string s = "d" + std::to_string(k + 1);
                    std::vector<std::int32_t> digits(k + 1);
                    for (int r = k; r >= 0; --r) {
                        digits[r] = static_cast<std::int32_t>(pf % mx.sizes[r]);
                        pf /= mx.sizes[r];
                    }
                    for (int r = 0; r <= k; ++r) s += "_" + std::to_string(digits[r]);
                    s += "_" + std::to_string(jj);
                    return s;
                }
            }
        }
        return "x" + std::to_string(j);
    }
};

struct LPRowSpec {
    std::vector<std::pair<std::int64_t, double>> entries;
    char sense = '<';
    double rhs = 0.0;
};

// Assemble a generic LP (used by the transport LP and by tests).
inline LPModel build_lp(std::vector<double> objective, const std::vector<LPRowSpec>& rows,
                        std::vector<std::string> names = {}) {
    LPModel m;
    m.num_vars = static_cast<std::int64_t>(objective.size());
    m.primal_var_count = m.num_vars;
    m.objective = std::move(objective);
    m.var_names = std::move(names);
    m.row_start.push_back(0);
    for (const auto& r : rows) {
        for (const auto& [j, v] : r.entries) {
            if (j < 0 || j >= m.num_vars) raise(ErrorCode::InvalidArgument, "column out of range");
            m.col_idx.push_back(static_cast<std::int32_t>(j));
            m.vals.push_back(v);
        }
        m.row_start.push_back(static_cast<std::int64_t>(m.col_idx.size()));
        m.sense.push_back(r.sense);
        m.rhs.push_back(r.rhs);
    }
    return m;
}

struct SolveOptions {
    std::int64_t size_cap = 200000;   // primal-variable cap; solve refuses beyond
    double pivot_tol = 1e-10;
    double feas_tol = 1e-9;
    double dual_tol = 1e-9;
    double gap_tol = 1e-7;
    int refactor_every = 50;
    std::int64_t max_pivots = 2000000;
    int bland_stall = 1000;    // consecutive degenerate pivots before Bland's rule
    std::int64_t price_block = 65536;
};

struct LPSolution {
    LPStatus status = LPStatus::infeasible;
    std::vector<double> primal;  // structural variables
    std::vector<double> dual;    // one multiplier per row, original sign convention
    double objective_value = -std::numeric_limits<double>::infinity();
    std::int64_t iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
};

namespace lpdetail {

struct Csc {
    std::int64_t ncols = 0;
    std::vector<std::int64_t> col_start;
    std::vector<std::int32_t> row_idx;
    std::vector<double> vals;
};

// Sparse LU via left-looking elimination with partial pivoting.  Columns are
// processed in a static order (ascending nonzero count); dependent columns
// are repaired by substituting a unit column on a free row.
struct SparseLU {
    int m = 0;
    std::vector<std::vector<std::pair<std::int32_t, double>>> lcol; // (orig row, val)
    std::vector<std::vector<std::pair<std::int32_t, double>>> ucol; // (step, val)
    std::vector<double> udiag;
    std::vector<std::int32_t> prow;         // step -> original row
    std::vector<std::int32_t> rowstep;      // original row -> step
    std::vector<std::int32_t> slot_of_step; // step -> basis slot
    std::vector<std::int32_t> step_of_slot; // basis slot -> step

    // workspace
    std::vector<double> xw;
    std::vector<std::int32_t> touched;
    std::vector<char> intouch;
    std::vector<std::int32_t> steps_hit;
    std::vector<char> stepmark;
    std::vector<std::int32_t> dfs_stack;

    // Factor the basis given by slot -> sparse column.  Returns repairs as
    // (slot, row) pairs where a dependent column was replaced by a unit
    // column e_row.
    std::vector<std::pair<int, int>>
    factor(int m_, const std::vector<std::vector<std::pair<std::int32_t, double>>>& cols) {
        m = m_;
        lcol.assign(m, {});
        ucol.assign(m, {});
        udiag.assign(m, 0.0);
        prow.assign(m, -1);
        rowstep.assign(m, -1);
        slot_of_step.assign(m, -1);
        step_of_slot.assign(m, -1);
        xw.assign(m, 0.0);
        intouch.assign(m, 0);
        stepmark.assign(m, 0);
        touched.clear();
        steps_hit.clear();

        std::vector<std::pair<int, int>> repairs;
        std::vector<int> order(m);
        for (int i = 0; i < m; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return cols[a].size() < cols[b].size();
        });

        int next_free_row = 0; // cursor for repair rows
        for (int t = 0; t < m; ++t) {
            int slot = order[t];
            eliminate(cols[slot]);
            // pivot: largest magnitude on an unassigned row
            int piv = -1;
            double best = 0.0;
            for (std::int32_t r : touched)
                if (rowstep[r] < 0 && std::abs(xw[r]) > best) {
                    best = std::abs(xw[r]);
                    piv = r;
                }
            if (piv < 0 || best <= 1e-10) {
                // column numerically dependent: substitute a unit column
                clear_work();
                while (next_free_row < m && rowstep[next_free_row] >= 0) ++next_free_row;
                piv = next_free_row;
                repairs.emplace_back(slot, piv);
                xw[piv] = 1.0;
                intouch[piv] = 1;
                touched.push_back(piv);
            }
            double pv = xw[piv];
            prow[t] = piv;
            rowstep[piv] = t;
            slot_of_step[t] = slot;
            step_of_slot[slot] = t;
            udiag[t] = pv;
            for (std::int32_t r : touched) {
                if (r == piv) continue;
                double v = xw[r];
                if (v == 0.0) continue;
                if (rowstep[r] >= 0)
                    ucol[t].emplace_back(rowstep[r], v);
                else
                    lcol[t].emplace_back(r, v / pv);
            }
            clear_work();
        }
        return repairs;
    }

    // x = B^{-1} rhs, result indexed by basis slot.  rhs given by original row.
    void ftran(const double* rhs, double* out_by_slot) {
        std::vector<double>& z = xw;
        for (int r = 0; r < m; ++r) z[r] = rhs[r];
        for (int t = 0; t < m; ++t) {
            double v = z[prow[t]];
            if (v == 0.0) continue;
            for (const auto& [r, l] : lcol[t]) z[r] -= l * v;
        }
        for (int t = m - 1; t >= 0; --t) {
            double x = z[prow[t]] / udiag[t];
            z[prow[t]] = x;
            if (x != 0.0)
                for (const auto& [s, u] : ucol[t]) z[prow[s]] -= u * x;
        }
        for (int t = 0; t < m; ++t) out_by_slot[slot_of_step[t]] = z[prow[t]];
        for (int r = 0; r < m; ++r) z[r] = 0.0;
    }

    // y^T = c_B^T B^{-1}, c indexed by basis slot, y by original row.
    void btran(const double* c_by_slot, double* y_by_row) {
        std::vector<double>& v = xw;
        for (int t = 0; t < m; ++t)
            v[t] = c_by_slot[slot_of_step[t]];
        for (int t = 0; t < m; ++t) {
            double acc = v[t];
            for (const auto& [s, u] : ucol[t]) acc -= u * v[s];
            v[t] = acc / udiag[t];
        }
        for (int t = m - 1; t >= 0; --t) {
            double acc = v[t];
            for (const auto& [r, l] : lcol[t]) acc -= l * v[rowstep[r]];
            v[t] = acc;
        }
        for (int t = 0; t < m; ++t) y_by_row[prow[t]] = v[t];
        for (int r = 0; r < m; ++r) v[r] = 0.0;
    }

private:
    void clear_work() {
        for (std::int32_t r : touched) {
            xw[r] = 0.0;
            intouch[r] = 0;
        }
        touched.clear();
        for (std::int32_t s : steps_hit) stepmark[s] = 0;
        steps_hit.clear();
    }

    // Apply previously formed L columns to the incoming column; pattern via
    // DFS over the step dependency graph (edges always increase the step).
    void eliminate(const std::vector<std::pair<std::int32_t, double>>& col) {
        for (const auto& [r, v] : col) {
            if (!intouch[r]) {
                intouch[r] = 1;
                touched.push_back(r);
            }
            xw[r] += v;
            if (rowstep[r] >= 0 && !stepmark[rowstep[r]]) dfs(rowstep[r]);
        }
        std::sort(steps_hit.begin(), steps_hit.end());
        for (std::int32_t s : steps_hit) {
            double v = xw[prow[s]];
            if (v == 0.0) continue;
            for (const auto& [r, l] : lcol[s]) {
                if (!intouch[r]) {
                    intouch[r] = 1;
                    touched.push_back(r);
                    // a new fill row may itself be pivotal in a later step of
                    // this same pattern; fills with assigned rows only appear
                    // at steps > s which the DFS below would have missed
                }
                xw[r] -= l * v;
            }
        }
    }

    void dfs(std::int32_t start) {
        dfs_stack.clear();
        dfs_stack.push_back(start);
        while (!dfs_stack.empty()) {
            std::int32_t s = dfs_stack.back();
            dfs_stack.pop_back();
            if (stepmark[s]) continue;
            stepmark[s] = 1;
            steps_hit.push_back(s);
            for (const auto& [r, l] : lcol[s]) {
                (void)l;
                if (rowstep[r] >= 0 && !stepmark[rowstep[r]]) dfs_stack.push_back(rowstep[r]);
            }
        }
    }
};

} // namespace lpdetail

// ---------------------------------------------------------------------------
// Revised primal simplex.

namespace lpdetail {

class SimplexEngine {
public:
    SimplexEngine(const LPModel& model, const SolveOptions& opt) : model_(model), opt_(opt) {
        m_ = static_cast<int>(model.num_rows());
        n_struct_ = model.num_vars;
        build_standard_form();
        slack_base_ = n_struct_;
        art_base_ = n_struct_ + m_;
        n_ids_ = n_struct_ + 2 * static_cast<std::int64_t>(m_);
        where_basic_.assign(n_ids_, -1);
        basis_.assign(m_, -1);
        xb_.assign(m_, 0.0);
        cb_.assign(m_, 0.0);
        y_.assign(m_, 0.0);
        dir_slot_.assign(m_, 0.0);
        cwork_.assign(m_, 0.0);
        rhswork_.assign(m_, 0.0);
        colbuf_.reserve(64);
    }

    LPSolution run() {
        init_basis();
        phase_ = 1;
        rebuild_cb();
        refactor();
        LPSolution sol;
        std::int64_t pivots = 0;
        int resumes = 0;
        bool bland = false;
        bool clean = true; // factorization fresh since the last pivot
        int degen_run = 0;

        while (true) {
            if (pivots >= opt_.max_pivots)
                raise(ErrorCode::IterationLimit,
                      "pivot cap " + std::to_string(opt_.max_pivots) + " reached");
            if (pivots_since_refactor_ >= opt_.refactor_every) {
                refactor();
                clean = true;
            }

            lu_btran_with_etas();
            std::int64_t enter = price(bland);
            if (enter < 0) {
                // re-confirm the verdict on a fresh factorization
                if (!clean) {
                    refactor();
                    clean = true;
                    continue;
                }
                if (phase_ == 1) {
                    double art = artificial_mass();
                    if (art > opt_.feas_tol) {
                        sol.status = LPStatus::infeasible;
                        sol.iterations = pivots;
                        sol.objective_value = -std::numeric_limits<double>::infinity();
                        return sol;
                    }
                    phase_ = 2;
                    rebuild_cb();
                    bland = false;
                    degen_run = 0;
                    continue;
                }
                refine_primal();
                if (certify(sol, pivots)) return sol;
                if (++resumes > 3)
                    raise(ErrorCode::NumericalFailure, "residuals exceed tolerances after resumes");
                continue;
            }

            ftran_column(enter);
            int leave = ratio_test(bland);
            if (leave < 0) {
                if (phase_ == 1)
                    raise(ErrorCode::NumericalFailure, "unbounded phase-1 direction");
                if (!clean) {
                    refactor();
                    clean = true;
                    continue;
                }
                sol.status = LPStatus::unbounded;
                sol.iterations = pivots;
                sol.objective_value = std::numeric_limits<double>::infinity();
                return sol;
            }

            double step = std::max(0.0, xb_[leave]) / dir_slot_[leave];
            if (basis_[leave] >= art_base_) step = 0.0; // artificial guard exit
            for (int s = 0; s < m_; ++s) xb_[s] -= step * dir_slot_[s];
            std::int64_t old = basis_[leave];
            where_basic_[old] = -1;
            basis_[leave] = enter;
            where_basic_[enter] = leave;
            xb_[leave] = step;
            cb_[leave] = cost_of(enter);
            push_eta(leave);
            ++pivots;
            ++pivots_since_refactor_;
            clean = false;

            if (step < 1e-12) {
                if (++degen_run > opt_.bland_stall) bland = true;
            } else {
                degen_run = 0;
                bland = false;
            }
        }
    }

private:
    const LPModel& model_;
    SolveOptions opt_;
    int m_ = 0;
    std::int64_t n_struct_ = 0, slack_base_ = 0, art_base_ = 0, n_ids_ = 0;
    Csc csc_;
    std::vector<double> b_;       // post-negation rhs
    std::vector<double> row_sign_; // +1/-1
    std::vector<std::int8_t> slack_coef_;

    std::vector<std::int64_t> basis_;
    std::vector<std::int32_t> where_basic_;
    std::vector<double> xb_, cb_, y_, dir_slot_, cwork_, rhswork_;
    std::vector<std::pair<std::int32_t, double>> colbuf_;
    int phase_ = 1;
    std::int64_t price_cursor_ = 0;
    int pivots_since_refactor_ = 0;

    SparseLU lu_;
    struct Eta {
        std::int32_t slot;
        double pivot;
        std::vector<std::pair<std::int32_t, double>> entries; // excluding pivot slot
    };
    std::vector<Eta> etas_;

    void build_standard_form() {
        b_.assign(m_, 0.0);
        row_sign_.assign(m_, 1.0);
        slack_coef_.assign(m_, 0);
        for (int r = 0; r < m_; ++r) {
            double sign = 1.0;
            double rhs = model_.rhs[r];
            char sense = model_.sense[r];
            std::int8_t sc = sense == '<' ? 1 : (sense == '>' ? -1 : 0);
            if (rhs < 0.0 || (rhs == 0.0 && sense == '>')) {
                sign = -1.0;
                rhs = -rhs;
                sc = static_cast<std::int8_t>(-sc);
            }
            row_sign_[r] = sign;
            b_[r] = rhs;
            slack_coef_[r] = sc;
        }
        // CSR -> CSC with row signs applied
        csc_.ncols = n_struct_;
        csc_.col_start.assign(n_struct_ + 1, 0);
        const auto nnz = model_.nnz();
        for (std::int64_t k = 0; k < nnz; ++k) csc_.col_start[model_.col_idx[k] + 1]++;
        for (std::int64_t j = 0; j < n_struct_; ++j) csc_.col_start[j + 1] += csc_.col_start[j];
        csc_.row_idx.assign(nnz, 0);
        csc_.vals.assign(nnz, 0.0);
        std::vector<std::int64_t> cursor(csc_.col_start.begin(), csc_.col_start.end() - 1);
        for (int r = 0; r < m_; ++r) {
            for (std::int64_t k = model_.row_start[r]; k < model_.row_start[r + 1]; ++k) {
                std::int64_t pos = cursor[model_.col_idx[k]]++;
                csc_.row_idx[pos] = r;
                csc_.vals[pos] = model_.vals[k] * row_sign_[r];
            }
        }
    }

    double cost_of(std::int64_t id) const {
        if (phase_ == 1) return id >= art_base_ ? -1.0 : 0.0;
        return id < n_struct_ ? model_.objective[id] : 0.0;
    }

    void rebuild_cb() {
        for (int s = 0; s < m_; ++s) cb_[s] = cost_of(basis_[s]);
    }

    void get_col(std::int64_t id, std::vector<std::pair<std::int32_t, double>>& out) const {
        out.clear();
        if (id < n_struct_) {
            for (std::int64_t k = csc_.col_start[id]; k < csc_.col_start[id + 1]; ++k)
                out.emplace_back(csc_.row_idx[k], csc_.vals[k]);
        } else if (id < art_base_) {
            int r = static_cast<int>(id - slack_base_);
            out.emplace_back(r, static_cast<double>(slack_coef_[r]));
        } else {
            out.emplace_back(static_cast<int>(id - art_base_), 1.0);
        }
    }

    void init_basis() {
        for (int r = 0; r < m_; ++r) {
            std::int64_t id = slack_coef_[r] == 1 ? slack_base_ + r : art_base_ + r;
            basis_[r] = id;
            where_basic_[id] = r;
            xb_[r] = b_[r];
        }
    }

    double artificial_mass() const {
        double s = 0.0;
        for (int r = 0; r < m_; ++r)
            if (basis_[r] >= art_base_) s += std::max(0.0, xb_[r]);
        return s;
    }

    void refactor() {
        std::vector<std::vector<std::pair<std::int32_t, double>>> cols(m_);
        for (int s = 0; s < m_; ++s) get_col(basis_[s], cols[s]);
        auto repairs = lu_.factor(m_, cols);
        for (auto [slot, row] : repairs) {
            where_basic_[basis_[slot]] = -1;
            std::int64_t id = art_base_ + row;
            basis_[slot] = id;
            where_basic_[id] = slot;
            cb_[slot] = cost_of(id);
        }
        etas_.clear();
        pivots_since_refactor_ = 0;
        lu_.ftran(b_.data(), xb_.data());
    }

    void refine_primal() {
        // one step of iterative refinement on B x_B = b
        std::vector<double> res(m_, 0.0);
        for (int r = 0; r < m_; ++r) res[r] = b_[r];
        for (int s = 0; s < m_; ++s) {
            get_col(basis_[s], colbuf_);
            for (const auto& [r, v] : colbuf_) res[r] -= v * xb_[s];
        }
        std::vector<double> dx(m_, 0.0);
        lu_.ftran(res.data(), dx.data());
        for (int s = 0; s < m_; ++s) xb_[s] += dx[s];
    }

    void lu_btran_with_etas() {
        // y^T = c_B^T B^{-1} with B = B0 E1..Ek: pass c through etas backwards
        cwork_ = cb_;
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double acc = cwork_[it->slot];
            for (const auto& [s, d] : it->entries) acc -= cwork_[s] * d;
            cwork_[it->slot] = acc / it->pivot;
        }
        lu_.btran(cwork_.data(), y_.data());
    }

    void refine_dual() {
        // one refinement step on B^T y = c_B (only called right after refactor)
        std::vector<double> res(m_, 0.0);
        for (int s = 0; s < m_; ++s) {
            get_col(basis_[s], colbuf_);
            double acc = cb_[s];
            for (const auto& [r, v] : colbuf_) acc -= v * y_[r];
            res[s] = acc;
        }
        std::vector<double> dy(m_, 0.0);
        lu_.btran(res.data(), dy.data());
        for (int r = 0; r < m_; ++r) y_[r] += dy[r];
    }

    void ftran_column(std::int64_t enter) {
        get_col(enter, colbuf_);
        std::fill(rhswork_.begin(), rhswork_.end(), 0.0);
        for (const auto& [r, v] : colbuf_) rhswork_[r] = v;
        lu_.ftran(rhswork_.data(), dir_slot_.data());
        for (const auto& e : etas_) {
            double t = dir_slot_[e.slot] / e.pivot;
            if (t != 0.0)
                for (const auto& [s, d] : e.entries) dir_slot_[s] -= d * t;
            dir_slot_[e.slot] = t;
        }
    }

    void push_eta(int slot) {
        Eta e;
        e.slot = slot;
        e.pivot = dir_slot_[slot];
        for (int s = 0; s < m_; ++s)
            if (s != slot && dir_slot_[s] != 0.0) e.entries.emplace_back(s, dir_slot_[s]);
        etas_.push_back(std::move(e));
    }

    double reduced_cost(std::int64_t id) const {
        double c = (phase_ == 1) ? 0.0 : (id < n_struct_ ? model_.objective[id] : 0.0);
        if (id < n_struct_) {
            double acc = c;
            for (std::int64_t k = csc_.col_start[id]; k < csc_.col_start[id + 1]; ++k)
                acc -= y_[csc_.row_idx[k]] * csc_.vals[k];
            return acc;
        }
        int r = static_cast<int>(id - slack_base_);
        return c - y_[r] * static_cast<double>(slack_coef_[r]);
    }

    bool candidate_id(std::int64_t id) const {
        if (where_basic_[id] >= 0) return false;
        if (id >= slack_base_ && slack_coef_[id - slack_base_] == 0) return false;
        return true;
    }

    // Deterministic pricing: Bland's rule scans by ascending index; otherwise
    // cyclic fixed-size blocks, most positive reduced cost inside the first
    // block holding a candidate.
    std::int64_t price(bool bland) {
        const std::int64_t nids = art_base_; // artificials never enter
        if (bland) {
            for (std::int64_t id = 0; id < nids; ++id) {
                if (!candidate_id(id)) continue;
                if (reduced_cost(id) > opt_.dual_tol) return id;
            }
            return -1;
        }
        const std::int64_t bs = opt_.price_block;
        const std::int64_t nblocks = (nids + bs - 1) / bs;
        for (std::int64_t bi = 0; bi < nblocks; ++bi) {
            std::int64_t blk = (price_cursor_ + bi) % nblocks;
            std::int64_t lo = blk * bs, hi = std::min(nids, lo + bs);
            std::int64_t best = -1;
            double best_rc = opt_.dual_tol;
            for (std::int64_t id = lo; id < hi; ++id) {
                if (!candidate_id(id)) continue;
                double rc = reduced_cost(id);
                if (rc > best_rc) {
                    best_rc = rc;
                    best = id;
                }
            }
            if (best >= 0) {
                price_cursor_ = blk;
                return best;
            }
        }
        return -1;
    }

    // Returns leaving slot or -1 (unbounded).  Basic artificials sitting at
    // zero block at any nonzero direction entry so they can never regain
    // positive value; positive-valued artificials (phase 1) follow the
    // ordinary ratio rule.
    int ratio_test(bool bland) {
        int guard = -1;
        double guard_mag = 0.0;
        for (int s = 0; s < m_; ++s) {
            if (basis_[s] >= art_base_ && xb_[s] <= opt_.feas_tol &&
                std::abs(dir_slot_[s]) > opt_.pivot_tol) {
                if (std::abs(dir_slot_[s]) > guard_mag) {
                    guard_mag = std::abs(dir_slot_[s]);
                    guard = s;
                }
            }
        }
        if (guard >= 0) return guard;

        double best_ratio = std::numeric_limits<double>::infinity();
        int best = -1;
        double best_mag = 0.0;
        for (int s = 0; s < m_; ++s) {
            double d = dir_slot_[s];
            if (d <= opt_.pivot_tol) continue;
            double ratio = std::max(0.0, xb_[s]) / d;
            if (best < 0 || ratio < best_ratio - 1e-15) {
                best_ratio = ratio;
                best = s;
                best_mag = d;
            } else if (ratio <= best_ratio + 1e-15) {
                // tie: Bland wants the lowest basic column id, otherwise take
                // the largest pivot magnitude for stability
                bool take = bland ? basis_[s] < basis_[best] : d > best_mag;
                if (take) {
                    best = s;
                    best_mag = d;
                    best_ratio = std::min(best_ratio, ratio);
                }
            }
        }
        return best;
    }

    bool certify(LPSolution& sol, std::int64_t pivots) {
        lu_btran_with_etas();
        refine_dual();

        std::vector<double> x(n_struct_, 0.0);
        for (int s = 0; s < m_; ++s)
            if (basis_[s] < n_struct_) x[basis_[s]] = xb_[s];

        double pres = 0.0;
        for (std::int64_t j = 0; j < n_struct_; ++j) pres = std::max(pres, -x[j]);
        for (int r = 0; r < m_; ++r) {
            double lhs = 0.0;
            for (std::int64_t k = model_.row_start[r]; k < model_.row_start[r + 1]; ++k)
                lhs += model_.vals[k] * x[model_.col_idx[k]];
            double diff = lhs - model_.rhs[r];
            char sense = model_.sense[r];
            double viol = sense == '<' ? std::max(0.0, diff)
                                       : (sense == '>' ? std::max(0.0, -diff) : std::abs(diff));
            pres = std::max(pres, viol);
        }

        double dres = 0.0;
        for (std::int64_t id = 0; id < art_base_; ++id) {
            if (id >= slack_base_ && slack_coef_[id - slack_base_] == 0) continue;
            double rc = reduced_cost(id);
            if (where_basic_[id] >= 0)
                dres = std::max(dres, std::abs(rc));
            else
                dres = std::max(dres, rc);
        }

        std::vector<double> objterms;
        objterms.reserve(m_);
        for (std::int64_t j = 0; j < n_struct_; ++j)
            if (x[j] != 0.0 && model_.objective[j] != 0.0)
                objterms.push_back(model_.objective[j] * x[j]);
        double obj = objterms.empty() ? 0.0 : stable_sum(objterms);

        std::vector<double> dualterms;
        dualterms.reserve(m_);
        for (int r = 0; r < m_; ++r) {
            double yr = y_[r] * row_sign_[r];
            if (yr != 0.0 && model_.rhs[r] != 0.0) dualterms.push_back(yr * model_.rhs[r]);
        }
        double dobj = dualterms.empty() ? 0.0 : stable_sum(dualterms);
        double gap = std::abs(obj - dobj);

        if (pres > opt_.feas_tol || dres > opt_.dual_tol || gap > opt_.gap_tol) return false;

        sol.status = LPStatus::optimal;
        sol.iterations = pivots;
        for (auto& v : x)
            if (v < 0.0) v = 0.0;
        sol.primal = std::move(x);
        sol.dual.assign(m_, 0.0);
        for (int r = 0; r < m_; ++r) sol.dual[r] = y_[r] * row_sign_[r];
        sol.objective_value = obj;
        sol.primal_residual = pres;
        sol.dual_residual = dres;
        sol.gap = gap;
        return true;
    }
};

} // namespace lpdetail

// Deterministic two-phase revised simplex with certified residuals.
inline LPSolution solve(const LPModel& model, const SolveOptions& opt = {}) {
    if (model.primal_var_count > opt.size_cap)
        raise(ErrorCode::SizeCap, "model has " + std::to_string(model.primal_var_count) +
                                      " primal variables, cap is " + std::to_string(opt.size_cap));
    if (model.num_vars == 0 || model.num_rows() == 0)
        raise(ErrorCode::InvalidArgument, "empty model");
    lpdetail::SimplexEngine engine(model, opt);
    return engine.run();
}

// ---------------------------------------------------------------------------
// Relaxed-MOT model of the slack-variable LP: marginal equalities, the
// bracketing rows -delta <= drift <= delta per prefix and coordinate, and one
// slack-budget row per step.

inline LPModel build_relaxed_mot_lp(const std::vector<DiscreteMeasure>& marginals,
                                    const CostEval& cost, double eps,
                                    std::int64_t build_cap = 20000000) {
    const int N = static_cast<int>(marginals.size());
    if (N < 2) raise(ErrorCode::InvalidArgument, "need at least two marginals");
    if (!(eps >= 0.0)) raise(ErrorCode::InvalidArgument, "eps must be >= 0");
    const int d = marginals[0].dim;
    for (const auto& m : marginals) {
        m.validate();
        if (m.dim != d) raise(ErrorCode::DimensionMismatch, "marginal dimensions differ");
    }

    MotIndexMaps mx;
    mx.n_marginals = N;
    mx.dim = d;
    mx.sizes.resize(N);
    for (int k = 0; k < N; ++k) mx.sizes[k] = static_cast<std::int32_t>(marginals[k].size());
    mx.d_product = 1;
    for (int k = 0; k < N; ++k) {
        mx.d_product *= mx.sizes[k];
        if (mx.d_product > build_cap)
            raise(ErrorCode::SizeCap, "product support size exceeds build cap");
    }
    mx.suffix.assign(N, 1);
    for (int k = N - 2; k >= 0; --k) mx.suffix[k] = mx.suffix[k + 1] * mx.sizes[k + 1];
    mx.prefix.assign(N, 1);
    mx.prefix[0] = mx.sizes[0];
    for (int k = 1; k < N; ++k) mx.prefix[k] = mx.prefix[k - 1] * mx.sizes[k];
    mx.delta_start.assign(N - 1, 0);
    std::int64_t nv = mx.d_product;
    for (int k = 0; k + 1 < N; ++k) {
        mx.delta_start[k] = nv;
        nv += static_cast<std::int64_t>(d) * mx.prefix[k];
    }

    LPModel model;
    model.num_vars = nv;
    model.primal_var_count = mx.d_product;

    // objective: c(x^1_{i_1},...,x^N_{i_N}) over the product support
    model.objective.assign(nv, 0.0);
    {
        std::vector<std::int32_t> digits(N, 0);
        std::vector<double> flat(static_cast<std::size_t>(N) * d, 0.0);
        for (int k = 0; k < N; ++k)
            for (int c2 = 0; c2 < d; ++c2) flat[k * d + c2] = marginals[k].atoms[0].x[c2];
        for (std::int64_t f = 0; f < mx.d_product; ++f) {
            model.objective[f] = cost(flat);
            // odometer increment, last marginal fastest
            for (int k = N - 1; k >= 0; --k) {
                if (++digits[k] < mx.sizes[k]) {
                    const auto& p = marginals[k].atoms[digits[k]].x;
                    for (int c2 = 0; c2 < d; ++c2) flat[k * d + c2] = p[c2];
                    break;
                }
                digits[k] = 0;
                const auto& p = marginals[k].atoms[0].x;
                for (int c2 = 0; c2 < d; ++c2) flat[k * d + c2] = p[c2];
            }
        }
    }

    // row counts and nonzeros
    std::int64_t n_marg_rows = 0;
    for (int k = 0; k < N; ++k) n_marg_rows += mx.sizes[k];
    std::int64_t n_bracket_rows = 0, bracket_nnz = 0, budget_nnz = 0;
    for (int k = 0; k + 1 < N; ++k) {
        n_bracket_rows += 2 * static_cast<std::int64_t>(d) * mx.prefix[k];
        bracket_nnz += 2 * static_cast<std::int64_t>(d) * (mx.d_product + mx.prefix[k]);
        budget_nnz += static_cast<std::int64_t>(d) * mx.prefix[k];
    }
    std::int64_t n_rows = n_marg_rows + n_bracket_rows + (N - 1);
    std::int64_t nnz = static_cast<std::int64_t>(N) * mx.d_product + bracket_nnz + budget_nnz;

    model.row_start.reserve(n_rows + 1);
    model.col_idx.reserve(nnz);
    model.vals.reserve(nnz);
    model.sense.reserve(n_rows);
    model.rhs.reserve(n_rows);
    model.row_start.push_back(0);

    auto close_row = [&](char sense, double rhs) {
        model.row_start.push_back(static_cast<std::int64_t>(model.col_idx.size()));
        model.sense.push_back(sense);
        model.rhs.push_back(rhs);
    };

    // marginal equalities: sum over the other indices = alpha^k_{i_k}
    for (int k = 0; k < N; ++k) {
        const std::int64_t S = mx.suffix[k];
        const std::int64_t P = mx.d_product / (S * mx.sizes[k]);
        for (std::int32_t ik = 0; ik < mx.sizes[k]; ++ik) {
            for (std::int64_t a = 0; a < P; ++a) {
                std::int64_t base = (a * mx.sizes[k] + ik) * S;
                for (std::int64_t t = 0; t < S; ++t) {
                    model.col_idx.push_back(static_cast<std::int32_t>(base + t));
                    model.vals.push_back(1.0);
                }
            }
            close_row('=', marginals[k].atoms[ik].w);
        }
    }

    // bracketing rows: for step k, prefix (i_1..i_{k+1}), coordinate j:
    //   drift + delta >= 0 and drift - delta <= 0
    for (int k = 0; k + 1 < N; ++k) {
        const std::int64_t PF = mx.prefix[k];
        const std::int64_t S = mx.suffix[k];      // columns per prefix
        const std::int64_t S2 = mx.suffix[k + 1]; // columns per (prefix, i_{k+1})
        for (std::int64_t pf = 0; pf < PF; ++pf) {
            std::int32_t ik = static_cast<std::int32_t>(pf % mx.sizes[k]);
            for (int j = 0; j < d; ++j) {
                const double xk = marginals[k].atoms[ik].x[j];
                std::int64_t dcol = mx.slack_col(k, pf, j);
                for (int bound = 0; bound < 2; ++bound) {
                    for (std::int32_t in = 0; in < mx.sizes[k + 1]; ++in) {
                        double coef = marginals[k + 1].atoms[in].x[j] - xk;
                        std::int64_t base = pf * S + static_cast<std::int64_t>(in) * S2;
                        for (std::int64_t t = 0; t < S2; ++t) {
                            model.col_idx.push_back(static_cast<std::int32_t>(base + t));
                            model.vals.push_back(coef);
                        }
                    }
                    model.col_idx.push_back(static_cast<std::int32_t>(dcol));
                    if (bound == 0) {
                        model.vals.push_back(1.0);
                        close_row('>', 0.0);
                    } else {
                        model.vals.push_back(-1.0);
                        close_row('<', 0.0);
                    }
                }
            }
        }
    }

    // budget rows: sum of step-k slacks <= eps
    for (int k = 0; k + 1 < N; ++k) {
        std::int64_t cnt = static_cast<std::int64_t>(d) * mx.prefix[k];
        for (std::int64_t t = 0; t < cnt; ++t) {
            model.col_idx.push_back(static_cast<std::int32_t>(mx.delta_start[k] + t));
            model.vals.push_back(1.0);
        }
        close_row('<', eps);
    }

    model.mot = std::move(mx);
    return model;
}

// Reads the plan off the primal solution through the index maps.
inline TransportPlan extract_plan(const LPModel& model, const LPSolution& sol) {
    if (sol.status != LPStatus::optimal)
        raise(ErrorCode::NotOptimal, "plan extraction needs an optimal solution");
    if (!model.mot) raise(ErrorCode::InvalidArgument, "model has no MOT index maps");
    const auto& mx = *model.mot;

    TransportPlan plan;
    plan.dim = mx.dim;
    plan.supports.resize(mx.n_marginals);
    // supports are reconstructed by the caller; here indices only
    std::vector<std::pair<std::vector<std::int32_t>, double>> entries;
    double total = 0.0;
    for (std::int64_t f = 0; f < mx.d_product; ++f) {
        double w = sol.primal[f];
        if (w < -1e-12) raise(ErrorCode::NumericalFailure, "plan weight below -1e-12");
        if (w <= 0.0) continue;
        std::vector<std::int32_t> digits(mx.n_marginals);
        mx.decode(f, digits.data());
        entries.emplace_back(std::move(digits), w);
        total += w;
    }
    if (!(total > 0.0)) raise(ErrorCode::NumericalFailure, "plan carries no mass");
    for (auto& [idx, w] : entries) w /= total;
    plan.mass = std::move(entries);
    return plan;
}

// Same, but also attaches the marginal supports so the plan is free-standing.
inline TransportPlan extract_plan(const LPModel& model, const LPSolution& sol,
                                  const std::vector<DiscreteMeasure>& marginals) {
    TransportPlan plan = extract_plan(model, sol);
    plan.supports.clear();
    for (const auto& m : marginals) {
        std::vector<Point> pts;
        pts.reserve(m.size());
        for (const auto& a : m.atoms) pts.push_back(a.x);
        plan.supports.push_back(std::move(pts));
    }
    for (int k = 0; k < plan.n_marginals(); ++k) {
        std::vector<double> ref;
        ref.reserve(marginals[k].size());
        for (const auto& a : marginals[k].atoms) ref.push_back(a.w);
        if (plan.marginal_residual(k, ref) > 1e-9)
            raise(ErrorCode::NumericalFailure, "plan marginal residual above 1e-9");
    }
    return plan;
}

inline double duality_gap(const LPSolution& sol, const LPModel& model) {
    if (sol.status != LPStatus::optimal)
        raise(ErrorCode::NotOptimal, "duality gap needs an optimal solution");
    std::vector<double> terms;
    for (std::int64_t r = 0; r < model.num_rows(); ++r)
        if (sol.dual[r] != 0.0 && model.rhs[r] != 0.0) terms.push_back(sol.dual[r] * model.rhs[r]);
    double dobj = terms.empty() ? 0.0 : stable_sum(terms);
    return std::abs(sol.objective_value - dobj);
}

namespace lpdetail {
inline void fmt17(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}
} // namespace lpdetail

// Standard human-readable LP text (Maximize / Subject To / Bounds / End);
// coefficients carry 17 significant digits so a re-parse is lossless.
inline void export_lp_text(const LPModel& model, std::ostream& os) {
    std::string line;
    os << "Maximize\n obj:";
    bool first = true;
    for (std::int64_t j = 0; j < model.num_vars; ++j) {
        double c = model.objective[j];
        if (c == 0.0) continue;
        line.clear();
        line += first ? " " : (c >= 0.0 ? " + " : " - ");
        if (!first && c < 0.0) c = -c;
        lpdetail::fmt17(line, c);
        line += " ";
        line += model.var_name(j);
        os << line;
        first = false;
        if ((j & 1023) == 1023) os.flush();
    }
    if (first) os << " 0";
    os << "\nSubject To\n";
    for (std::int64_t r = 0; r < model.num_rows(); ++r) {
        line.clear();
        line += " c" + std::to_string(r) + ":";
        bool rfirst = true;
        for (std::int64_t k = model.row_start[r]; k < model.row_start[r + 1]; ++k) {
            double v = model.vals[k];
            if (v == 0.0) continue;
            line += rfirst ? " " : (v >= 0.0 ? " + " : " - ");
            if (!rfirst && v < 0.0) v = -v;
            lpdetail::fmt17(line, v);
            line += " ";
            line += model.var_name(model.col_idx[k]);
            rfirst = false;
        }
        if (rfirst) line += " 0";
        char s = model.sense[r];
        line += s == '<' ? " <= " : (s == '>' ? " >= " : " = ");
        lpdetail::fmt17(line, model.rhs[r]);
        line += "\n";
        os << line;
    }
    // all variables carry the LP-format default bound x >= 0
    os << "Bounds\nEnd\n";
}

inline std::string export_lp_text(const LPModel& model) {
    std::ostringstream ss;
    export_lp_text(model, ss);
    return ss.str();
}

} // namespace motlp
