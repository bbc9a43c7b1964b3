#ifndef RISKPOOL_APPLICATIONS_HPP
#define RISKPOOL_APPLICATIONS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "riskpool/aggregation.hpp"
#include "riskpool/decision.hpp"

namespace riskpool {

enum class KernelShape { gaussian, epanechnikov, tricube, boxcar, tabulated };

/// Non-increasing kernel shape on [0, inf) plus a bandwidth, fixed or
/// per-query. Arbitrary shapes are supported through a tabulated monotone
/// function with linear interpolation.
struct KernelSpec {
    KernelShape shape = KernelShape::gaussian;
    double bandwidth = 1.0;
    std::function<double(std::span<const double>)> bandwidth_fn; // overrides fixed value
    std::vector<std::pair<double, double>> shape_table;          // (t, value), t ascending

    double shape_value(double t) const {
        switch (shape) {
        case KernelShape::gaussian:
            return std::exp(-0.5 * t * t);
        case KernelShape::epanechnikov:
            return std::max(0.0, 1.0 - t * t);
        case KernelShape::tricube: {
            const double u = std::max(0.0, 1.0 - t * t * t);
            return u * u * u;
        }
        case KernelShape::boxcar:
            return t <= 1.0 ? 1.0 : 0.0;
        case KernelShape::tabulated: {
            if (t <= shape_table.front().first) return shape_table.front().second;
            if (t >= shape_table.back().first) return shape_table.back().second;
            std::size_t hi = 1;
            while (shape_table[hi].first < t) ++hi;
            const auto& [t0, v0] = shape_table[hi - 1];
            const auto& [t1, v1] = shape_table[hi];
            return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
        }
        }
        return 0.0;
    }

    double bandwidth_at(std::span<const double> query) const {
        return bandwidth_fn ? bandwidth_fn(query) : bandwidth;
    }

    void validate() const {
        if (!bandwidth_fn)
            detail::require(std::isfinite(bandwidth) && bandwidth > 0.0, "range",
                            "bandwidth must be positive");
        if (shape == KernelShape::tabulated) {
            detail::require(shape_table.size() >= 2, "schema",
                            "tabulated shape needs at least two points");
            for (std::size_t i = 0; i < shape_table.size(); ++i) {
                detail::require(shape_table[i].first >= 0.0, "range",
                                "tabulated shape abscissae must be non-negative");
                detail::require(shape_table[i].second >= 0.0, "range",
                                "tabulated shape values must be non-negative");
                if (i) {
                    detail::require(shape_table[i].first > shape_table[i - 1].first,
                                    "schema", "tabulated abscissae must increase");
                    detail::require(
                        shape_table[i].second <= shape_table[i - 1].second + algebra_tol,
                        "range", "tabulated shape must be non-increasing");
                }
            }
        }
    }
};

struct Sample {
    std::vector<double> x;
    double y = 0.0;
};

namespace detail {

// Kahan-compensated accumulator; keeps the normalizer independent of
// summation order to well below the documented tolerance.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

} // namespace detail

/// Nadaraya-Watson kernel-weighted average of the sample responses at x0.
inline double nw_smooth(const std::vector<Sample>& samples, std::span<const double> x0,
                        const KernelSpec& kernel) {
    detail::require(!samples.empty(), "empty", "need at least one sample");
    kernel.validate();
    const double h = kernel.bandwidth_at(x0);
    detail::require(std::isfinite(h) && h > 0.0, "range",
                    "bandwidth must be positive at the query point");
    detail::KahanSum numerator;
    detail::KahanSum denominator;
    for (const auto& s : samples) {
        detail::require(s.x.size() == x0.size(), "dim",
                        "sample and query dimensions differ (axis: features)");
        const double w = kernel.shape_value(detail::euclidean_distance(s.x, x0) / h);
        numerator.add(w * s.y);
        denominator.add(w);
    }
    if (!(denominator.sum > 0.0))
        throw validation_error("empty_neighborhood",
                               "all kernel weights vanish at the query point");
    return numerator.sum / denominator.sum;
}

/// Pooling for repeated experts: each expert's weight is scaled by its
/// appearance count, equivalent to aggregating the expanded pool.
inline Prior aggregate_with_multiplicity(
    const std::vector<std::pair<Expert, std::uint64_t>>& experts,
    const std::map<std::string, double>& weights) {
    detail::require(!experts.empty(), "empty", "need at least one expert");
    std::set<std::string> seen;
    const std::size_t m = experts.front().first.prior.size();
    double total = 0.0;
    AggregationRule rule{weights, {}};
    for (const auto& [e, count] : experts) {
        detail::require(count >= 1, "range", "multiplicity counts must be at least 1");
        detail::require(seen.insert(e.id).second, "schema",
                        "duplicate expert id '" + e.id + "'");
        e.prior.validate();
        detail::require(e.prior.size() == m, "dim",
                        "expert priors must agree on length (axis: states)");
        total += static_cast<double>(count) * rule.weight_of(e.id);
    }
    Prior out;
    out.weights.assign(m, 0.0);
    for (const auto& [e, count] : experts) {
        const double w = static_cast<double>(count) * rule.weight_of(e.id) / total;
        for (std::size_t t = 0; t < m; ++t) out.weights[t] += w * e.prior[t];
    }
    return out;
}

/// An expert observed some time before the prediction.
struct TimedExpert {
    double time = 0.0;
    Expert expert;
};

/// Stationary discounted pooling: weight q^t * w(e) for an expert observed at
/// time t. Shifting every timestamp rescales all weights by the same factor,
/// which cancels in the normalization.
inline Prior aggregate_timed(const std::vector<TimedExpert>& experts, double q,
                             const std::map<std::string, double>& weights) {
    detail::require(!experts.empty(), "empty", "need at least one expert");
    detail::require(std::isfinite(q) && q > 0.0, "range", "discount factor must be positive");
    const std::size_t m = experts.front().expert.prior.size();
    AggregationRule rule{weights, {}};
    std::map<std::string, const Prior*> priors;
    double total = 0.0;
    for (const auto& [t, e] : experts) {
        detail::require(std::isfinite(t) && t >= 0.0, "range",
                        "timestamps must be finite and non-negative");
        e.prior.validate();
        detail::require(e.prior.size() == m, "dim",
                        "expert priors must agree on length (axis: states)");
        auto [it, inserted] = priors.emplace(e.id, &e.prior);
        if (!inserted)
            for (std::size_t s = 0; s < m; ++s)
                detail::require(std::abs((*it->second)[s] - e.prior[s]) <= algebra_tol,
                                "schema",
                                "expert '" + e.id + "' appears with conflicting priors");
        total += std::pow(q, t) * rule.weight_of(e.id);
    }
    Prior out;
    out.weights.assign(m, 0.0);
    for (const auto& [t, e] : experts) {
        const double w = std::pow(q, t) * rule.weight_of(e.id) / total;
        for (std::size_t s = 0; s < m; ++s) out.weights[s] += w * e.prior[s];
    }
    return out;
}

/// Empirical table over timed subsets: singleton priors are time-independent
/// (stationarity), entries map finite sets of (time, id) pairs to priors.
struct TimedTable {
    std::map<std::string, Prior> singletons;
    std::vector<std::pair<std::vector<std::pair<double, std::string>>, Prior>> entries;

    void validate() const {
        detail::require(!singletons.empty(), "schema", "timed table needs singletons");
        const std::size_t m = singletons.begin()->second.size();
        for (const auto& [id, prior] : singletons) {
            prior.validate();
            detail::require(prior.size() == m, "dim",
                            "table priors must agree on length (axis: states)");
        }
        for (const auto& [members, prior] : entries) {
            detail::require(!members.empty(), "schema", "empty timed subset");
            std::set<std::pair<double, std::string>> seen;
            for (const auto& [t, id] : members) {
                detail::require(std::isfinite(t) && t >= 0.0, "range",
                                "timestamps must be finite and non-negative");
                detail::require(singletons.count(id) == 1, "schema",
                                "unknown expert id '" + id + "' in timed subset");
                detail::require(seen.insert({t, id}).second, "schema",
                                "duplicate (time, id) member in timed subset");
            }
            prior.validate();
            detail::require(prior.size() == m, "dim",
                            "table priors must agree on length (axis: states)");
        }
    }
};

struct DiscountRecoveryReport {
    std::string q_source; // which entries identified the discount factor
    std::vector<std::pair<std::string, double>> residuals;
    double max_reproduction_error = 0.0;
};

struct DiscountRecovery {
    double q = 1.0;
    std::map<std::string, double> weights;
    DiscountRecoveryReport report;
};

namespace detail {

inline std::string timed_subset_label(
    const std::vector<std::pair<double, std::string>>& members) {
    std::string s;
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i) s += ',';
        s += "(" + format_number(members[i].first) + "," + members[i].second + ")";
    }
    return s;
}

} // namespace detail

/// Recovers the discount factor and weights from a timed table. The discount
/// factor is identified from two pair entries over the same unordered expert
/// pair whose time gaps differ: the ratio of their segment coefficients is
/// q raised to the gap difference. A pair entry holding one expert at two
/// times equals that expert's own prior and carries no discount information,
/// so it only contributes a residual check.
inline DiscountRecovery recover_discount(const TimedTable& table) {
    table.validate();

    struct PairObs {
        std::string a;
        std::string b;
        double time_a;
        double time_b;
        double gap;       // time_a - time_b
        double log_ratio; // log of q^gap * w(a)/w(b)
        std::string label;
    };
    DiscountRecovery out;
    std::vector<PairObs> observations;
    for (const auto& [members, prior] : table.entries) {
        if (members.size() != 2) continue;
        auto sorted = members;
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& l, const auto& r) {
                      return std::tie(l.second, l.first) < std::tie(r.second, r.first);
                  });
        const auto& [ta, ida] = sorted[0];
        const auto& [tb, idb] = sorted[1];
        const std::string label = detail::timed_subset_label(sorted);
        if (ida == idb) {
            // Same expert at two times: the pooled prior is the expert's own.
            double res = 0.0;
            const Prior& g = table.singletons.at(ida);
            for (std::size_t t = 0; t < g.size(); ++t)
                res = std::max(res, std::abs(prior[t] - g[t]));
            out.report.residuals.emplace_back("same-expert pair {" + label + "}", res);
            continue;
        }
        const Prior& ga = table.singletons.at(ida);
        const Prior& gb = table.singletons.at(idb);
        const auto line = detail::project_to_line(ga.weights, gb.weights, prior.weights);
        if (line.degenerate)
            throw infeasible_error("unidentifiable",
                                   "identical singleton priors on pair {" + label + "}");
        if (line.residual > pair_residual_tol) {
            out.report.residuals.emplace_back("off-segment pair {" + label + "}",
                                              line.residual);
            continue;
        }
        detail::require(line.lambda > algebra_tol && line.lambda < 1.0 - algebra_tol,
                        "range", "pair {" + label + "} puts all weight on one expert");
        observations.push_back({ida, idb, ta, tb, ta - tb,
                                std::log(line.lambda / (1.0 - line.lambda)), label});
    }

    std::sort(observations.begin(), observations.end(), [](const PairObs& l, const PairObs& r) {
        return std::tie(l.a, l.b, l.gap, l.time_a) < std::tie(r.a, r.b, r.gap, r.time_a);
    });

    // Identify q from the first expert pair observed at two different gaps.
    std::optional<double> log_q;
    for (std::size_t i = 0; i + 1 < observations.size() && !log_q; ++i) {
        const auto& first = observations[i];
        for (std::size_t j = i + 1; j < observations.size(); ++j) {
            const auto& second = observations[j];
            if (second.a != first.a || second.b != first.b) break;
            if (std::abs(second.gap - first.gap) <= algebra_tol) continue;
            log_q = (first.log_ratio - second.log_ratio) / (first.gap - second.gap);
            out.report.q_source = "{" + first.label + "} vs {" + second.label + "}";
            break;
        }
    }
    if (!log_q)
        throw infeasible_error(
            "unidentifiable",
            "need two pair entries over the same expert pair with different time gaps "
            "to separate the discount factor from the weights");
    out.q = std::exp(*log_q);

    // Weight ratios: log w(a)/w(b) = log_ratio - gap * log q. Use the first
    // observation per expert pair as a graph edge; later ones become
    // residual checks.
    std::map<std::pair<std::string, std::string>, double> edge_log_ratio;
    for (const auto& obs : observations) {
        const double lr = obs.log_ratio - obs.gap * *log_q;
        auto [it, inserted] = edge_log_ratio.emplace(std::make_pair(obs.a, obs.b), lr);
        if (!inserted)
            out.report.residuals.emplace_back("repeated pair {" + obs.label + "}",
                                              std::abs(std::exp(lr - it->second) - 1.0));
    }

    std::map<std::string, std::vector<std::pair<std::string, double>>> adjacency;
    for (const auto& [pair, lr] : edge_log_ratio) {
        adjacency[pair.first].emplace_back(pair.second, lr);   // log w(a) - log w(b)
        adjacency[pair.second].emplace_back(pair.first, -lr);
    }
    for (auto& [id, nbrs] : adjacency) std::sort(nbrs.begin(), nbrs.end());

    const std::string root = table.singletons.begin()->first;
    std::map<std::string, double> log_w;
    log_w[root] = 0.0;
    std::vector<std::string> frontier{root};
    std::set<std::pair<std::string, std::string>> tree_edges;
    while (!frontier.empty()) {
        std::vector<std::string> next;
        for (const auto& id : frontier) {
            for (const auto& [nbr, lr] : adjacency[id]) {
                if (log_w.count(nbr)) continue;
                // lr = log w(id) - log w(nbr)
                log_w[nbr] = log_w[id] - lr;
                tree_edges.insert({std::min(id, nbr), std::max(id, nbr)});
                next.push_back(nbr);
            }
        }
        frontier = std::move(next);
    }
    for (const auto& [id, prior] : table.singletons)
        if (!log_w.count(id))
            throw infeasible_error("disconnected",
                                   "pair graph does not reach expert '" + id + "'");
    for (const auto& [pair, lr] : edge_log_ratio) {
        if (tree_edges.count(pair)) continue;
        const double propagated = log_w[pair.first] - log_w[pair.second];
        out.report.residuals.emplace_back("cycle {" + pair.first + "," + pair.second + "}",
                                          std::abs(std::exp(lr - propagated) - 1.0));
    }
    for (const auto& [id, lw] : log_w) out.weights[id] = std::exp(lw);

    // Reproduction: every entry re-pooled with the recovered (q, w).
    for (const auto& [members, prior] : table.entries) {
        std::vector<TimedExpert> pool;
        for (const auto& [t, id] : members)
            pool.push_back({t, Expert{id, table.singletons.at(id), {}, {}, 1}});
        const Prior re = aggregate_timed(pool, out.q, out.weights);
        for (std::size_t t = 0; t < prior.size(); ++t)
            out.report.max_reproduction_error = std::max(
                out.report.max_reproduction_error, std::abs(re[t] - prior[t]));
    }
    return out;
}

/// Individualistic voting: the social prior is the weighted average of the
/// reported ones, and a single ballot is returned unchanged.
inline Prior vote(const std::vector<Prior>& ballots, const std::vector<double>& weights) {
    detail::require(!ballots.empty(), "empty", "need at least one ballot");
    detail::require(ballots.size() == weights.size(), "dim", "one weight per ballot required");
    const std::size_t m = ballots.front().size();
    double total = 0.0;
    for (std::size_t i = 0; i < ballots.size(); ++i) {
        ballots[i].validate();
        detail::require(ballots[i].size() == m, "dim",
                        "ballots must agree on length (axis: states)");
        detail::require(std::isfinite(weights[i]) && weights[i] > 0.0, "range",
                        "ballot weights must be positive");
        total += weights[i];
    }
    Prior out;
    out.weights.assign(m, 0.0);
    for (std::size_t i = 0; i < ballots.size(); ++i)
        for (std::size_t t = 0; t < m; ++t)
            out.weights[t] += weights[i] / total * ballots[i][t];
    return out;
}

struct SymmetryViolation {
    std::size_t i = 0;
    std::size_t j = 0;
    double w_ij = 0.0;
    double w_ji = 0.0;
};

/// Flags every pair where the similarity table is asymmetric beyond the
/// tolerance. A similarity weight induced by exchangeable characteristics
/// must be symmetric.
inline std::vector<SymmetryViolation> symmetry_violations(
    const std::vector<std::vector<double>>& similarity, double tol = 1e-9) {
    const std::size_t n = similarity.size();
    for (const auto& row : similarity)
        detail::require(row.size() == n, "dim", "similarity table must be square");
    std::vector<SymmetryViolation> out;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(similarity[i][j] - similarity[j][i]) > tol)
                out.push_back({i, j, similarity[i][j], similarity[j][i]});
    return out;
}

} // namespace riskpool

#endif // RISKPOOL_APPLICATIONS_HPP
