#ifndef RISKPOOL_DECISION_HPP
#define RISKPOOL_DECISION_HPP

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "riskpool/errors.hpp"

namespace riskpool {

inline constexpr double input_tol = 1e-9;    // normalization checks on inputs
inline constexpr double algebra_tol = 1e-12; // internal algebraic identities

/// A finite decision problem: states of nature, an outcome space with one
/// sampling distribution per state, a finite action set, and a non-negative
/// loss table indexed by (state, action).
struct DecisionProblem {
    std::vector<std::string> states;
    std::vector<std::string> outcomes;
    std::vector<std::string> actions;
    std::vector<std::vector<double>> likelihood; // states x outcomes, rows sum to 1
    std::vector<std::vector<double>> loss;       // states x actions, entries >= 0

    std::size_t num_states() const { return states.size(); }
    std::size_t num_outcomes() const { return outcomes.size(); }
    std::size_t num_actions() const { return actions.size(); }

    void validate() const {
        detail::require(!states.empty(), "schema", "problem needs at least one state");
        detail::require(!outcomes.empty(), "schema", "problem needs at least one outcome");
        detail::require(!actions.empty(), "schema", "problem needs at least one action");
        detail::require(likelihood.size() == states.size(), "dim",
                        "likelihood row count must match states (axis: states)");
        detail::require(loss.size() == states.size(), "dim",
                        "loss row count must match states (axis: states)");
        for (std::size_t t = 0; t < states.size(); ++t) {
            detail::require(likelihood[t].size() == outcomes.size(), "dim",
                            "likelihood row " + std::to_string(t) +
                                " must have one entry per outcome (axis: outcomes)");
            double sum = 0.0;
            for (double p : likelihood[t]) {
                detail::require(std::isfinite(p) && p >= 0.0 && p <= 1.0 + input_tol, "range",
                                "likelihood entries must lie in [0, 1]");
                sum += p;
            }
            detail::require(std::abs(sum - 1.0) <= input_tol, "range",
                            "likelihood row " + std::to_string(t) + " must sum to 1");
            detail::require(loss[t].size() == actions.size(), "dim",
                            "loss row " + std::to_string(t) +
                                " must have one entry per action (axis: actions)");
            for (double l : loss[t])
                detail::require(std::isfinite(l) && l >= 0.0, "range",
                                "loss entries must be non-negative");
        }
    }
};

/// Deterministic rule: one action index per outcome.
struct PureRule {
    std::vector<std::size_t> assignment;

    bool operator==(const PureRule&) const = default;
    auto operator<=>(const PureRule&) const = default;
};

/// Finite mixture over pure rules. Every attainable risk profile of the
/// finite problem is a convex combination of pure-rule profiles, so this
/// representation loses nothing.
struct RandomizedRule {
    std::vector<std::pair<PureRule, double>> support;

    static RandomizedRule pure(PureRule rule) {
        return RandomizedRule{{{std::move(rule), 1.0}}};
    }

    void validate() const {
        detail::require(!support.empty(), "schema", "randomized rule needs non-empty support");
        double sum = 0.0;
        for (const auto& [rule, w] : support) {
            detail::require(std::isfinite(w) && w > 0.0, "range",
                            "support weights must be positive");
            detail::require(rule.assignment.size() == support.front().first.assignment.size(),
                            "dim", "support rules must agree on length (axis: outcomes)");
            sum += w;
        }
        detail::require(std::abs(sum - 1.0) <= input_tol, "range",
                        "support weights must sum to 1");
        auto sorted = support;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 1; i < sorted.size(); ++i)
            detail::require(!(sorted[i].first == sorted[i - 1].first), "schema",
                            "duplicate pure rule in support");
    }
};

/// Expected loss per state for a fixed rule.
struct RiskProfile {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }

    void validate() const {
        detail::require(!values.empty(), "schema", "risk profile must not be empty");
        for (double v : values)
            detail::require(std::isfinite(v) && v >= 0.0, "range",
                            "risk values must be non-negative");
    }
};

/// Probability vector over states.
struct Prior {
    std::vector<double> weights;

    std::size_t size() const { return weights.size(); }
    double operator[](std::size_t i) const { return weights[i]; }

    void validate() const {
        detail::require(!weights.empty(), "schema", "prior must not be empty");
        double sum = 0.0;
        for (double w : weights) {
            detail::require(std::isfinite(w) && w >= 0.0 && w <= 1.0 + input_tol, "range",
                            "prior entries must lie in [0, 1]");
            sum += w;
        }
        detail::require(std::abs(sum - 1.0) <= input_tol, "range", "prior must sum to 1");
    }
};

namespace detail {

inline void check_rule_dims(const DecisionProblem& problem, const PureRule& rule) {
    require(rule.assignment.size() == problem.num_outcomes(), "dim",
            "rule must assign one action per outcome (axis: outcomes)");
    for (std::size_t a : rule.assignment)
        require(a < problem.num_actions(), "dim",
                "action index out of range (axis: actions)");
}

inline void check_rule_dims(const DecisionProblem& problem, const RandomizedRule& rule) {
    require(!rule.support.empty(), "schema", "randomized rule needs non-empty support");
    for (const auto& [pure, w] : rule.support) check_rule_dims(problem, pure);
}

} // namespace detail

/// Risk of a randomized rule: for each state, the likelihood-weighted loss of
/// the rule's action, averaged over the mixture.
inline RiskProfile risk_profile(const DecisionProblem& problem, const RandomizedRule& rule) {
    detail::check_rule_dims(problem, rule);
    rule.validate();
    const std::size_t m = problem.num_states();
    const std::size_t n = problem.num_outcomes();
    RiskProfile out;
    out.values.assign(m, 0.0);
    for (const auto& [pure, w] : rule.support) {
        for (std::size_t t = 0; t < m; ++t) {
            double s = 0.0;
            for (std::size_t x = 0; x < n; ++x)
                s += problem.likelihood[t][x] * problem.loss[t][pure.assignment[x]];
            out.values[t] += w * s;
        }
    }
    return out;
}

/// <prior, profile>; bilinear in both arguments.
inline double bayes_risk(const Prior& prior, const RiskProfile& profile) {
    detail::require(prior.size() == profile.size(), "dim",
                    "prior and risk profile lengths differ (axis: states)");
    double s = 0.0;
    for (std::size_t t = 0; t < prior.size(); ++t) s += prior[t] * profile[t];
    return s;
}

struct BayesRule {
    PureRule rule;
    double value = 0.0;
};

/// Minimizer of the Bayes risk over all randomized rules. The Bayes risk is
/// separable across outcomes, so a per-outcome argmin over actions attains
/// the global minimum; ties go to the lowest action index.
inline BayesRule bayes_rule(const DecisionProblem& problem, const Prior& prior) {
    detail::require(prior.size() == problem.num_states(), "dim",
                    "prior length must match states (axis: states)");
    const std::size_t m = problem.num_states();
    const std::size_t n = problem.num_outcomes();
    const std::size_t k = problem.num_actions();
    BayesRule result;
    result.rule.assignment.assign(n, 0);
    for (std::size_t x = 0; x < n; ++x) {
        std::size_t best_action = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < k; ++a) {
            double v = 0.0;
            for (std::size_t t = 0; t < m; ++t)
                v += prior[t] * problem.likelihood[t][x] * problem.loss[t][a];
            if (v < best) {
                best = v;
                best_action = a;
            }
        }
        result.rule.assignment[x] = best_action;
        result.value += best;
    }
    return result;
}

/// Mixture of randomized rules; duplicate pure rules are merged by weight
/// addition, so the profile of the result is exactly the weighted average of
/// the input profiles.
inline RandomizedRule mix(const std::vector<RandomizedRule>& rules,
                          const std::vector<double>& weights) {
    detail::require(!rules.empty(), "schema", "mix needs at least one rule");
    detail::require(rules.size() == weights.size(), "dim",
                    "one weight per rule required");
    double sum = 0.0;
    for (double w : weights) {
        detail::require(std::isfinite(w) && w >= 0.0, "range",
                        "mixture weights must be non-negative");
        sum += w;
    }
    detail::require(std::abs(sum - 1.0) <= input_tol, "range",
                    "mixture weights must sum to 1");
    std::map<PureRule, double> merged;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (weights[i] == 0.0) continue;
        rules[i].validate();
        for (const auto& [pure, w] : rules[i].support) merged[pure] += weights[i] * w;
    }
    RandomizedRule out;
    for (auto& [pure, w] : merged)
        if (w > 0.0) out.support.emplace_back(pure, w);
    return out;
}

struct RiskSetEntry {
    PureRule rule;
    RiskProfile profile;
};

/// All pure rules with their risk profiles, in lexicographic order of the
/// assignment vector. The attainable risk set is the convex hull of these
/// profiles.
inline std::vector<RiskSetEntry> enumerate_risk_set(const DecisionProblem& problem,
                                                    std::uint64_t cap = 100000) {
    const std::size_t n = problem.num_outcomes();
    const std::size_t k = problem.num_actions();
    std::uint64_t count = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (count > cap / k + 1) {
            count = cap + 1;
            break;
        }
        count *= k;
    }
    if (count > cap) {
        const double total = std::pow(static_cast<double>(k), static_cast<double>(n));
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.0f", total);
        throw validation_error(
            "cap", "risk set has " + std::to_string(k) + "^" + std::to_string(n) + " = " +
                       std::string(buf) + " pure rules, above the cap of " +
                       std::to_string(cap));
    }

    const std::size_t m = problem.num_states();
    std::vector<RiskSetEntry> out;
    out.reserve(count);
    PureRule rule;
    rule.assignment.assign(n, 0);
    while (true) {
        RiskProfile profile;
        profile.values.assign(m, 0.0);
        for (std::size_t t = 0; t < m; ++t) {
            double s = 0.0;
            for (std::size_t x = 0; x < n; ++x)
                s += problem.likelihood[t][x] * problem.loss[t][rule.assignment[x]];
            profile.values[t] = s;
        }
        out.push_back({rule, std::move(profile)});

        // Odometer increment, rightmost outcome fastest.
        std::size_t pos = n;
        while (pos > 0) {
            --pos;
            if (++rule.assignment[pos] < k) break;
            rule.assignment[pos] = 0;
            if (pos == 0) return out;
        }
    }
}

} // namespace riskpool

#endif // RISKPOOL_DECISION_HPP
