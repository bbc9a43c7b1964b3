#ifndef RISKPOOL_ADMISSIBILITY_HPP
#define RISKPOOL_ADMISSIBILITY_HPP

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "riskpool/decision.hpp"
#include "riskpool/simplex.hpp"

namespace riskpool {

inline constexpr double admissibility_tol = 1e-9;    // LP objective gap
inline constexpr double dominance_strict_tol = 1e-12; // strictness threshold

enum class DominanceVerdict {
    dominates,
    dominated_by,
    equal,
    incomparable,
    as_good_as,
    as_good_as_reversed,
};

/// Componentwise comparison of risk profiles. "dominates" means r1 is at
/// least as good everywhere and strictly better in some state; coordinates
/// within the strictness threshold count as ties.
inline DominanceVerdict dominance(const RiskProfile& r1, const RiskProfile& r2) {
    detail::require(r1.size() == r2.size(), "dim",
                    "risk profile lengths differ (axis: states)");
    bool any_less = false;
    bool any_greater = false;
    bool raw_le = true;
    bool raw_ge = true;
    for (std::size_t t = 0; t < r1.size(); ++t) {
        const double d = r1[t] - r2[t];
        if (d < -dominance_strict_tol) any_less = true;
        if (d > dominance_strict_tol) any_greater = true;
        if (d > 0.0) raw_le = false;
        if (d < 0.0) raw_ge = false;
    }
    if (!any_less && !any_greater) return DominanceVerdict::equal;
    if (any_less && !any_greater) return DominanceVerdict::dominates;
    if (any_greater && !any_less) return DominanceVerdict::dominated_by;
    if (raw_le) return DominanceVerdict::as_good_as;
    if (raw_ge) return DominanceVerdict::as_good_as_reversed;
    return DominanceVerdict::incomparable;
}

namespace detail {

/// LP deciding whether any convex combination of `profiles` improves on
/// profiles[index]: minimize the coordinate sum of a hull point constrained
/// to lie below profiles[index] componentwise. The point profiles[index]
/// itself is feasible, so the optimum is at most its coordinate sum; a
/// strictly smaller optimum exhibits a dominating mixture.
inline lp::Solution hull_dominance_lp(const std::vector<RiskProfile>& profiles,
                                      std::size_t index) {
    const std::size_t count = profiles.size();
    const std::size_t m = profiles.front().size();
    lp::Program p;
    p.objective.assign(count, 0.0);
    for (std::size_t j = 0; j < count; ++j)
        for (std::size_t t = 0; t < m; ++t) p.objective[j] += profiles[j][t];
    p.eq_lhs.push_back(std::vector<double>(count, 1.0));
    p.eq_rhs.push_back(1.0);
    for (std::size_t t = 0; t < m; ++t) {
        std::vector<double> row(count);
        for (std::size_t j = 0; j < count; ++j) row[j] = profiles[j][t];
        p.ub_lhs.push_back(std::move(row));
        p.ub_rhs.push_back(profiles[index][t]);
    }
    return lp::solve(p);
}

inline void check_profiles(const std::vector<RiskProfile>& profiles) {
    require(!profiles.empty(), "schema", "need at least one risk profile");
    for (const auto& r : profiles)
        require(r.size() == profiles.front().size(), "dim",
                "risk profile lengths differ (axis: states)");
}

} // namespace detail

/// Indices of profiles not Pareto dominated by any point of the convex hull
/// of all profiles (equivalently, by any randomized rule).
inline std::vector<std::size_t> admissible_profiles(const std::vector<RiskProfile>& profiles) {
    detail::check_profiles(profiles);
    const std::size_t count = profiles.size();
    const std::size_t m = profiles.front().size();

    // Cheap pairwise prefilter: a profile beaten outright by another one,
    // with clear margin, cannot survive the hull test.
    std::vector<bool> clearly_dominated(count, false);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::size_t j = 0; j < count && !clearly_dominated[i]; ++j) {
            if (j == i) continue;
            bool le = true;
            bool strict = false;
            for (std::size_t t = 0; t < m; ++t) {
                const double d = profiles[j][t] - profiles[i][t];
                if (d > 0.0) {
                    le = false;
                    break;
                }
                if (d < -1e-6) strict = true;
            }
            if (le && strict) clearly_dominated[i] = true;
        }
    }

    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < count; ++i) {
        if (clearly_dominated[i]) continue;
        const auto sol = detail::hull_dominance_lp(profiles, i);
        if (sol.status != lp::Status::optimal)
            throw validation_error("lp", "admissibility LP failed at profile index " +
                                             std::to_string(i));
        double own = 0.0;
        for (std::size_t t = 0; t < m; ++t) own += profiles[i][t];
        if (sol.value >= own - admissibility_tol) out.push_back(i);
    }
    return out;
}

/// Supporting-hyperplane certificate: a prior whose Bayes risk is minimized
/// at the certified profile over every listed profile.
struct CompleteClassCertificate {
    std::size_t profile_index = 0;
    Prior supporting_prior;
    double bayes_value = 0.0;
    double gap = 0.0; // max over profiles of bayes_value - <prior, profile>
};

/// Finds the lexicographically smallest prior under which profiles[index]
/// attains the minimal Bayes risk among all profiles. Supporting priors are
/// not unique in general; the lexicographic rule makes the returned one
/// deterministic. Throws infeasible_error with a dominance witness when the
/// profile is not admissible.
inline CompleteClassCertificate supporting_prior(const std::vector<RiskProfile>& profiles,
                                                 std::size_t index) {
    detail::check_profiles(profiles);
    detail::require(index < profiles.size(), "range", "profile index out of range");
    const std::size_t m = profiles.front().size();

    lp::Program p;
    p.objective.assign(m, 0.0);
    p.eq_lhs.push_back(std::vector<double>(m, 1.0));
    p.eq_rhs.push_back(1.0);
    for (std::size_t j = 0; j < profiles.size(); ++j) {
        if (j == index) continue;
        std::vector<double> row(m);
        for (std::size_t t = 0; t < m; ++t) row[t] = profiles[index][t] - profiles[j][t];
        p.ub_lhs.push_back(std::move(row));
        p.ub_rhs.push_back(0.0);
    }

    const auto sol = lp::lexicographic_minimize(p, m);
    if (sol.status != lp::Status::optimal) {
        const auto dom = detail::hull_dominance_lp(profiles, index);
        std::string witness = "profile " + std::to_string(index) + " is Pareto dominated";
        if (dom.status == lp::Status::optimal) {
            witness += " by the mixture with coefficients [";
            char buf[32];
            bool first = true;
            for (std::size_t j = 0; j < dom.x.size(); ++j) {
                if (dom.x[j] <= 1e-9) continue;
                std::snprintf(buf, sizeof(buf), "%zu: %.6g", j, dom.x[j]);
                witness += (first ? "" : ", ") + std::string(buf);
                first = false;
            }
            witness += "]";
        }
        throw infeasible_error("infeasible", witness);
    }

    CompleteClassCertificate cert;
    cert.profile_index = index;
    cert.supporting_prior.weights.assign(m, 0.0);
    double sum = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        // Snap the pin slack left behind by the lexicographic stages.
        cert.supporting_prior.weights[t] = sol.x[t] <= 1e-11 ? 0.0 : sol.x[t];
        sum += cert.supporting_prior.weights[t];
    }
    detail::require(sum > 0.0, "lp", "degenerate supporting prior");
    for (double& w : cert.supporting_prior.weights) w /= sum;

    cert.bayes_value = bayes_risk(cert.supporting_prior, profiles[index]);
    cert.gap = -std::numeric_limits<double>::infinity();
    for (const auto& r : profiles)
        cert.gap = std::max(cert.gap, cert.bayes_value - bayes_risk(cert.supporting_prior, r));
    if (cert.gap > admissibility_tol)
        throw validation_error("lp", "supporting prior certificate exceeded tolerance");
    return cert;
}

/// True when the rule attains the minimal Bayes risk for the prior, within
/// the admissibility tolerance.
inline bool is_bayes_for(const DecisionProblem& problem, const RandomizedRule& rule,
                         const Prior& prior) {
    const auto profile = risk_profile(problem, rule);
    return bayes_risk(prior, profile) <= bayes_rule(problem, prior).value + admissibility_tol;
}

} // namespace riskpool

#endif // RISKPOOL_ADMISSIBILITY_HPP
