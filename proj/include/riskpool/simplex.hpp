#ifndef RISKPOOL_SIMPLEX_HPP
#define RISKPOOL_SIMPLEX_HPP

#include <cstddef>
#include <limits>
#include <vector>

#include "riskpool/errors.hpp"

namespace riskpool::lp {

enum class Status { optimal, infeasible, unbounded };

/// minimize objective . x   subject to
///   eq_lhs[r] . x == eq_rhs[r]
///   ub_lhs[r] . x <= ub_rhs[r]
///   x >= 0
struct Program {
    std::vector<double> objective;
    std::vector<std::vector<double>> eq_lhs;
    std::vector<double> eq_rhs;
    std::vector<std::vector<double>> ub_lhs;
    std::vector<double> ub_rhs;

    std::size_t variables() const { return objective.size(); }
};

struct Solution {
    Status status = Status::optimal;
    std::vector<double> x;
    double value = 0.0;
};

/// Dense two-phase primal simplex with Bland's rule (lowest-index entering
/// column, lowest-basis-index tie break on the ratio test). Bland's rule
/// cannot cycle, so runs are deterministic and terminating; an iteration cap
/// guards against numerical stalls on ill-scaled input. Artificial columns
/// are barred from entering, which keeps phase 1 sound: if the original
/// system is feasible, a positive phase-1 value always leaves some
/// non-artificial column with a negative reduced cost.
class DenseSimplex {
public:
    static constexpr double pivot_tol = 1e-9;
    static constexpr double cost_tol = 1e-9;
    static constexpr double feasibility_tol = 1e-7;

    explicit DenseSimplex(const Program& p) { build(p); }

    Solution solve() {
        if (phase_one() > feasibility_tol) return {Status::infeasible, {}, 0.0};
        drive_out_artificials();
        return phase_two();
    }

private:
    std::size_t structural_ = 0;
    std::size_t artificial_begin_ = 0;
    std::size_t columns_ = 0;
    std::vector<std::vector<double>> rows_;
    std::vector<double> rhs_;
    std::vector<std::size_t> basis_;
    std::vector<double> cost_;
    double cost_rhs_ = 0.0;
    std::vector<double> objective_;

    void build(const Program& p) {
        structural_ = p.variables();
        const std::size_t n_eq = p.eq_lhs.size();
        const std::size_t n_ub = p.ub_lhs.size();
        const std::size_t n_rows = n_eq + n_ub;
        artificial_begin_ = structural_ + n_ub;
        columns_ = artificial_begin_ + n_rows;

        detail::require(p.eq_rhs.size() == n_eq && p.ub_rhs.size() == n_ub, "lp",
                        "constraint sides of mismatched length");

        rows_.assign(n_rows, std::vector<double>(columns_, 0.0));
        rhs_.assign(n_rows, 0.0);
        basis_.assign(n_rows, 0);
        objective_ = p.objective;

        for (std::size_t r = 0; r < n_eq; ++r) {
            detail::require(p.eq_lhs[r].size() == structural_, "lp", "constraint row length");
            for (std::size_t j = 0; j < structural_; ++j) rows_[r][j] = p.eq_lhs[r][j];
            rhs_[r] = p.eq_rhs[r];
        }
        for (std::size_t r = 0; r < n_ub; ++r) {
            const std::size_t row = n_eq + r;
            detail::require(p.ub_lhs[r].size() == structural_, "lp", "constraint row length");
            for (std::size_t j = 0; j < structural_; ++j) rows_[row][j] = p.ub_lhs[r][j];
            rows_[row][structural_ + r] = 1.0;
            rhs_[row] = p.ub_rhs[r];
        }

        for (std::size_t i = 0; i < n_rows; ++i) {
            if (rhs_[i] < 0.0) {
                for (double& v : rows_[i]) v = -v;
                rhs_[i] = -rhs_[i];
            }
            rows_[i][artificial_begin_ + i] = 1.0;
            // Slack still has coefficient +1 only if the row was not negated;
            // use it as the initial basic variable where possible.
            if (i >= n_eq && rows_[i][structural_ + (i - n_eq)] > 0.5)
                basis_[i] = structural_ + (i - n_eq);
            else
                basis_[i] = artificial_begin_ + i;
        }
    }

    void set_cost(const std::vector<double>& c) {
        cost_.assign(columns_, 0.0);
        for (std::size_t j = 0; j < c.size(); ++j) cost_[j] = c[j];
        cost_rhs_ = 0.0;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const double f = cost_[basis_[i]];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < columns_; ++j) cost_[j] -= f * rows_[i][j];
            cost_rhs_ -= f * rhs_[i];
        }
    }

    void pivot(std::size_t row, std::size_t col) {
        const double d = rows_[row][col];
        for (double& v : rows_[row]) v /= d;
        rhs_[row] /= d;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            if (i == row) continue;
            const double f = rows_[i][col];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j < columns_; ++j) rows_[i][j] -= f * rows_[row][j];
            rhs_[i] -= f * rhs_[row];
        }
        const double f = cost_[col];
        if (f != 0.0) {
            for (std::size_t j = 0; j < columns_; ++j) cost_[j] -= f * rows_[row][j];
            cost_rhs_ -= f * rhs_[row];
        }
        basis_[row] = col;
    }

    // Returns optimal (true) or unbounded (false).
    bool iterate() {
        const std::size_t cap = 1000 + 50 * (rows_.size() + columns_);
        for (std::size_t it = 0; it < cap; ++it) {
            std::size_t entering = columns_;
            for (std::size_t j = 0; j < artificial_begin_; ++j) {
                if (cost_[j] < -cost_tol) {
                    entering = j;
                    break;
                }
            }
            if (entering == columns_) return true;

            std::size_t leaving = rows_.size();
            double best_ratio = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < rows_.size(); ++i) {
                const double coef = rows_[i][entering];
                if (coef <= pivot_tol) continue;
                const double ratio = rhs_[i] / coef;
                if (ratio < best_ratio - 1e-15 ||
                    (ratio <= best_ratio + 1e-15 &&
                     (leaving == rows_.size() || basis_[i] < basis_[leaving]))) {
                    best_ratio = ratio;
                    leaving = i;
                }
            }
            if (leaving == rows_.size()) return false;
            pivot(leaving, entering);
        }
        throw validation_error("lp", "simplex iteration cap exceeded (numerical stall)");
    }

    double phase_one() {
        std::vector<double> c(columns_, 0.0);
        for (std::size_t j = artificial_begin_; j < columns_; ++j) c[j] = 1.0;
        set_cost(c);
        iterate(); // phase 1 is bounded below by 0, never unbounded
        return -cost_rhs_;
    }

    void drive_out_artificials() {
        for (std::size_t i = 0; i < rows_.size();) {
            if (basis_[i] < artificial_begin_) {
                ++i;
                continue;
            }
            std::size_t col = artificial_begin_;
            for (std::size_t j = 0; j < artificial_begin_; ++j) {
                if (std::abs(rows_[i][j]) > pivot_tol) {
                    col = j;
                    break;
                }
            }
            if (col < artificial_begin_) {
                pivot(i, col);
                ++i;
            } else {
                // Redundant constraint: remove the row.
                rows_.erase(rows_.begin() + static_cast<std::ptrdiff_t>(i));
                rhs_.erase(rhs_.begin() + static_cast<std::ptrdiff_t>(i));
                basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(i));
            }
        }
    }

    Solution phase_two() {
        set_cost(objective_);
        if (!iterate()) return {Status::unbounded, {}, 0.0};
        Solution s;
        s.status = Status::optimal;
        s.x.assign(structural_, 0.0);
        for (std::size_t i = 0; i < rows_.size(); ++i)
            if (basis_[i] < structural_) s.x[basis_[i]] = rhs_[i];
        s.value = -cost_rhs_;
        return s;
    }
};

inline Solution solve(const Program& p) { return DenseSimplex(p).solve(); }

/// Minimizes x_0 over the feasible set, then x_1 among those minimizers, and
/// so on through x_{count-1}. Stages are pinned with a hair of slack so
/// floating-point optima never empty the next stage's feasible set.
inline Solution lexicographic_minimize(Program p, std::size_t count) {
    Solution s;
    for (std::size_t t = 0; t < count; ++t) {
        p.objective.assign(p.objective.size(), 0.0);
        p.objective[t] = 1.0;
        s = solve(p);
        if (s.status != Status::optimal) return s;
        std::vector<double> pin(p.objective.size(), 0.0);
        pin[t] = 1.0;
        p.ub_lhs.push_back(std::move(pin));
        p.ub_rhs.push_back(s.x[t] + 1e-12);
    }
    return s;
}

} // namespace riskpool::lp

#endif // RISKPOOL_SIMPLEX_HPP
