#ifndef RISKPOOL_AGGREGATION_HPP
#define RISKPOOL_AGGREGATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "riskpool/admissibility.hpp"
#include "riskpool/decision.hpp"
#include "riskpool/rng.hpp"
#include "riskpool/simplex.hpp"

namespace riskpool {

inline constexpr double consistency_tol = 1e-9;   // segment membership
inline constexpr double pair_residual_tol = 1e-9; // pair entry off its segment
inline constexpr double ratio_match_tol = 1e-6;   // cycle / reproduction checks

struct Expert {
    std::string id;
    Prior prior;
    std::vector<double> characteristics; // empty = none
    std::optional<double> timestamp;
    std::uint64_t multiplicity = 1;
};

/// Weight function plus weak order. Ranks encode the weak order: higher rank
/// means higher order, ties are allowed.
struct AggregationRule {
    std::map<std::string, double> weights;
    std::map<std::string, int> order;

    double weight_of(const std::string& id) const {
        auto it = weights.find(id);
        detail::require(it != weights.end(), "weight", "no weight for expert '" + id + "'");
        detail::require(std::isfinite(it->second) && it->second > 0.0, "weight",
                        "weight for expert '" + id + "' must be positive");
        return it->second;
    }

    int rank_of(const std::string& id) const {
        auto it = order.find(id);
        detail::require(it != order.end(), "order", "no order rank for expert '" + id + "'");
        return it->second;
    }
};

namespace detail {

inline void check_pool(const std::vector<Expert>& experts) {
    require(!experts.empty(), "empty", "need at least one expert");
    std::set<std::string> ids;
    for (const auto& e : experts) {
        require(ids.insert(e.id).second, "schema", "duplicate expert id '" + e.id + "'");
        e.prior.validate();
        require(e.prior.size() == experts.front().prior.size(), "dim",
                "expert priors must agree on length (axis: states)");
    }
}

inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string key_string(const std::vector<std::string>& key) {
    std::string s;
    for (std::size_t i = 0; i < key.size(); ++i) {
        if (i) s += ',';
        s += key[i];
    }
    return s;
}

/// Least-squares projection of p onto the line through a and b:
/// p ~ lambda * a + (1 - lambda) * b. Residual is the max-norm distance at
/// the unclamped lambda.
struct LineProjection {
    double lambda = 0.0;
    double residual = 0.0;
    bool degenerate = false; // a == b within tolerance
};

inline LineProjection project_to_line(const std::vector<double>& a,
                                      const std::vector<double>& b,
                                      const std::vector<double>& p) {
    LineProjection out;
    double n2 = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double d = a[t] - b[t];
        n2 += d * d;
    }
    if (n2 <= 1e-24) {
        out.degenerate = true;
        for (std::size_t t = 0; t < a.size(); ++t)
            out.residual = std::max(out.residual, std::abs(p[t] - a[t]));
        return out;
    }
    double dot = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) dot += (p[t] - b[t]) * (a[t] - b[t]);
    out.lambda = dot / n2;
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double q = out.lambda * a[t] + (1.0 - out.lambda) * b[t];
        out.residual = std::max(out.residual, std::abs(p[t] - q));
    }
    return out;
}

/// Max-norm distance from p to the closed segment [a, b], plus the clamped
/// coefficient of the nearest point.
struct SegmentProjection {
    double lambda = 1.0;
    double distance = 0.0;
    bool degenerate = false;
};

inline SegmentProjection project_to_segment(const std::vector<double>& a,
                                            const std::vector<double>& b,
                                            const std::vector<double>& p) {
    const LineProjection line = project_to_line(a, b, p);
    SegmentProjection out;
    if (line.degenerate) {
        out.degenerate = true;
        out.distance = line.residual;
        return out;
    }
    out.lambda = std::clamp(line.lambda, 0.0, 1.0);
    for (std::size_t t = 0; t < a.size(); ++t) {
        const double q = out.lambda * a[t] + (1.0 - out.lambda) * b[t];
        out.distance = std::max(out.distance, std::abs(p[t] - q));
    }
    return out;
}

/// Affine dimension of a point cloud, with a rank tolerance.
inline std::size_t affine_rank(const std::vector<std::vector<double>>& points,
                               double tol = 1e-9) {
    if (points.size() <= 1) return 0;
    const std::size_t m = points.front().size();
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < points.size(); ++i) {
        std::vector<double> r(m);
        for (std::size_t t = 0; t < m; ++t) r[t] = points[i][t] - points[0][t];
        rows.push_back(std::move(r));
    }
    std::size_t rank = 0;
    for (std::size_t col = 0; col < m && rank < rows.size(); ++col) {
        std::size_t pivot = rank;
        for (std::size_t i = rank + 1; i < rows.size(); ++i)
            if (std::abs(rows[i][col]) > std::abs(rows[pivot][col])) pivot = i;
        if (std::abs(rows[pivot][col]) <= tol) continue;
        std::swap(rows[rank], rows[pivot]);
        for (std::size_t i = rank + 1; i < rows.size(); ++i) {
            const double f = rows[i][col] / rows[rank][col];
            for (std::size_t t = col; t < m; ++t) rows[i][t] -= f * rows[rank][t];
        }
        ++rank;
    }
    return rank;
}

} // namespace detail

/// Weighted average of the experts' priors, weights renormalized within the
/// set. This is the only form a consistent (non-degenerate) ranking rule can
/// take, so it is the canonical generator for everything downstream.
inline Prior aggregate(const std::vector<Expert>& experts, const AggregationRule& rule) {
    detail::check_pool(experts);
    double total = 0.0;
    for (const auto& e : experts) total += rule.weight_of(e.id);
    Prior out;
    out.weights.assign(experts.front().prior.size(), 0.0);
    for (const auto& e : experts) {
        const double w = rule.weight_of(e.id) / total;
        for (std::size_t t = 0; t < out.size(); ++t) out.weights[t] += w * e.prior[t];
    }
    return out;
}

/// Weak-order variant: only experts in the top equivalence class of the
/// order contribute; lower-ranked experts are ignored entirely.
inline Prior aggregate_ordered(const std::vector<Expert>& experts,
                               const AggregationRule& rule) {
    detail::check_pool(experts);
    int best = rule.rank_of(experts.front().id);
    for (const auto& e : experts) best = std::max(best, rule.rank_of(e.id));
    std::vector<Expert> top;
    for (const auto& e : experts)
        if (rule.rank_of(e.id) == best) top.push_back(e);
    return aggregate(top, rule);
}

enum class ProfilePreference { s1_better, s2_better, indifferent };

/// Ranking of two risk profiles under a prior: the one with lower Bayes risk
/// is preferred.
inline ProfilePreference prefers(const Prior& prior, const RiskProfile& s1,
                                 const RiskProfile& s2) {
    const double a = bayes_risk(prior, s1);
    const double b = bayes_risk(prior, s2);
    if (a < b - algebra_tol) return ProfilePreference::s1_better;
    if (b < a - algebra_tol) return ProfilePreference::s2_better;
    return ProfilePreference::indifferent;
}

/// Empirical ranking rule on a finite pool: singleton priors for every
/// expert plus priors for selected larger subsets, keyed canonically.
struct RuleTable {
    std::map<std::string, Prior> singletons;
    std::map<std::vector<std::string>, Prior> entries;

    std::size_t state_count() const { return singletons.begin()->second.size(); }

    void validate() const {
        detail::require(!singletons.empty(), "schema", "rule table needs singleton entries");
        const std::size_t m = singletons.begin()->second.size();
        for (const auto& [id, prior] : singletons) {
            prior.validate();
            detail::require(prior.size() == m, "dim",
                            "table priors must agree on length (axis: states)");
        }
        for (const auto& [key, prior] : entries) {
            detail::require(key.size() >= 2, "schema",
                            "singleton subsets belong in 'singletons'");
            detail::require(std::is_sorted(key.begin(), key.end()), "schema",
                            "table keys must be sorted");
            for (std::size_t i = 0; i < key.size(); ++i) {
                detail::require(i == 0 || key[i] != key[i - 1], "schema",
                                "duplicate id in table key");
                detail::require(singletons.count(key[i]) == 1, "schema",
                                "unknown expert id '" + key[i] + "' in table key");
            }
            prior.validate();
            detail::require(prior.size() == m, "dim",
                            "table priors must agree on length (axis: states)");
        }
    }

    bool contains(const std::vector<std::string>& key) const {
        if (key.size() == 1) return singletons.count(key[0]) == 1;
        return entries.count(key) == 1;
    }

    const Prior& lookup(const std::vector<std::string>& key) const {
        if (key.size() == 1) {
            auto it = singletons.find(key[0]);
            detail::require(it != singletons.end(), "schema",
                            "no table entry for '" + key[0] + "'");
            return it->second;
        }
        auto it = entries.find(key);
        detail::require(it != entries.end(), "schema",
                        "no table entry for {" + detail::key_string(key) + "}");
        return it->second;
    }

    std::vector<std::vector<std::string>> all_keys() const {
        std::vector<std::vector<std::string>> keys;
        for (const auto& [id, prior] : singletons) keys.push_back({id});
        for (const auto& [key, prior] : entries) keys.push_back(key);
        std::sort(keys.begin(), keys.end());
        return keys;
    }
};

enum class ConsistencyMode { weak, strict };
enum class ConsistencyVerdict { consistent, weakly_consistent_only, inconsistent };

struct ConsistencyViolation {
    std::vector<std::string> set_a;
    std::vector<std::string> set_b;
    std::string kind; // "segment", "strict", or "sampled"
    std::string detail;
};

struct ConsistencyReport {
    ConsistencyVerdict verdict = ConsistencyVerdict::consistent;
    std::vector<ConsistencyViolation> violations;
    std::size_t checked_pairs = 0;
};

/// Checks every disjoint pair (A, B) whose union also appears in the table.
/// Weak consistency for the pair means the union's prior lies on the closed
/// segment between the parts' priors; strict consistency additionally needs
/// an interior coefficient (unless the parts' priors coincide). Each pair is
/// also cross-validated on 100 seeded random risk-profile pairs: whenever
/// both parts weakly prefer s1 to s2, the union must as well. The sampling
/// threshold m*tol + premise slack makes a sampled counterexample imply a
/// segment violation, so the two tests cannot disagree.
inline ConsistencyReport check_consistency(const RuleTable& table, ConsistencyMode mode,
                                           double tol = consistency_tol) {
    table.validate();
    const std::size_t m = table.state_count();
    const auto keys = table.all_keys();

    ConsistencyReport report;
    bool weak_failed = false;
    bool strict_failed = false;

    for (const auto& u : keys) {
        if (u.size() < 2) continue;
        const Prior& g_union = table.lookup(u);
        const std::size_t splits = std::size_t{1} << u.size();
        for (std::size_t mask = 1; mask + 1 < splits; ++mask) {
            if (!(mask & 1)) continue; // visit each unordered split once
            std::vector<std::string> a;
            std::vector<std::string> b;
            for (std::size_t i = 0; i < u.size(); ++i)
                ((mask >> i) & 1 ? a : b).push_back(u[i]);
            if (!table.contains(a) || !table.contains(b)) continue;
            ++report.checked_pairs;
            const Prior& ga = table.lookup(a);
            const Prior& gb = table.lookup(b);

            const auto seg = detail::project_to_segment(ga.weights, gb.weights,
                                                        g_union.weights);
            if (seg.distance > tol) {
                weak_failed = true;
                report.violations.push_back(
                    {a, b, "segment",
                     "union prior is " + detail::format_number(seg.distance) +
                         " off the segment between the parts (lambda=" +
                         detail::format_number(seg.lambda) + ")"});
            } else if (mode == ConsistencyMode::strict && !seg.degenerate &&
                       (seg.lambda <= tol || seg.lambda >= 1.0 - tol)) {
                strict_failed = true;
                report.violations.push_back(
                    {a, b, "strict",
                     "union prior sits at an endpoint of the segment (lambda=" +
                         detail::format_number(seg.lambda) + ")"});
            }

            // Sampled implication cross-check on seeded profiles in [0,1]^m.
            // The violation threshold m*tol + slack guarantees that a sampled
            // counterexample forces a segment violation too, so the two tests
            // cannot contradict each other.
            const std::uint64_t seed =
                rng::fnv1a64(detail::key_string(a) + "|" + detail::key_string(b));
            const double sample_tol = static_cast<double>(m) * tol + 2.0 * algebra_tol;
            std::vector<double> s1(m);
            std::vector<double> s2(m);
            for (std::size_t draw = 0; draw < 100; ++draw) {
                double da = 0.0;
                double db = 0.0;
                double du = 0.0;
                const std::uint64_t base = draw * 2 * m;
                for (std::size_t t = 0; t < m; ++t) {
                    s1[t] = rng::uniform01_at(seed, base + t);
                    s2[t] = rng::uniform01_at(seed, base + m + t);
                    const double diff = s1[t] - s2[t];
                    da += ga[t] * diff;
                    db += gb[t] * diff;
                    du += g_union[t] * diff;
                }
                if (da <= algebra_tol && db <= algebra_tol && du > sample_tol) {
                    std::string s1_text;
                    std::string s2_text;
                    for (std::size_t t = 0; t < m; ++t) {
                        if (t) {
                            s1_text += ',';
                            s2_text += ',';
                        }
                        s1_text += detail::format_number(s1[t]);
                        s2_text += detail::format_number(s2[t]);
                    }
                    weak_failed = true;
                    report.violations.push_back(
                        {a, b, "sampled",
                         "both parts weakly prefer s1=[" + s1_text + "] to s2=[" + s2_text +
                             "] but the union does not (margin " +
                             detail::format_number(du) + ")"});
                    break; // one witness per pair is enough
                }
            }
        }
    }

    std::sort(report.violations.begin(), report.violations.end(),
              [](const ConsistencyViolation& l, const ConsistencyViolation& r) {
                  return std::tie(l.set_a, l.set_b, l.kind) <
                         std::tie(r.set_a, r.set_b, r.kind);
              });
    if (weak_failed)
        report.verdict = ConsistencyVerdict::inconsistent;
    else if (strict_failed)
        report.verdict = ConsistencyVerdict::weakly_consistent_only;
    else
        report.verdict = ConsistencyVerdict::consistent;
    return report;
}

/// Convex-hull membership via LP: the L1 projection distance onto the hull,
/// the mixture attaining it, and (when outside) a separating functional y
/// with <y, target> exceeding max over points of <y, point> by `margin`.
struct HullMembership {
    bool inside = true;
    double distance = 0.0;
    std::vector<double> coefficients;
    std::vector<double> separator;
    double margin = 0.0;
};

inline HullMembership hull_membership(const std::vector<std::vector<double>>& points,
                                      const std::vector<double>& target,
                                      double tol = consistency_tol) {
    detail::require(!points.empty(), "schema", "hull membership needs points");
    const std::size_t m = target.size();
    const std::size_t k = points.size();
    for (const auto& pt : points)
        detail::require(pt.size() == m, "dim", "hull points must match target length");

    // Variables: k mixture coefficients, then m positive and m negative
    // deviation parts. Minimize the L1 deviation.
    lp::Program p;
    p.objective.assign(k + 2 * m, 0.0);
    for (std::size_t t = 0; t < 2 * m; ++t) p.objective[k + t] = 1.0;
    for (std::size_t t = 0; t < m; ++t) {
        std::vector<double> row(k + 2 * m, 0.0);
        for (std::size_t j = 0; j < k; ++j) row[j] = points[j][t];
        row[k + t] = -1.0;
        row[k + m + t] = 1.0;
        p.eq_lhs.push_back(std::move(row));
        p.eq_rhs.push_back(target[t]);
    }
    {
        std::vector<double> row(k + 2 * m, 0.0);
        for (std::size_t j = 0; j < k; ++j) row[j] = 1.0;
        p.eq_lhs.push_back(std::move(row));
        p.eq_rhs.push_back(1.0);
    }
    const auto sol = lp::solve(p);
    detail::require(sol.status == lp::Status::optimal, "lp", "hull projection LP failed");

    HullMembership out;
    out.distance = sol.value;
    out.coefficients.assign(sol.x.begin(), sol.x.begin() + static_cast<std::ptrdiff_t>(k));
    out.inside = sol.value <= tol;
    if (out.inside) return out;

    // Separator: maximize <y, target> - t with <y, point> <= t and |y| <= 1.
    lp::Program s;
    s.objective.assign(2 * m + 2, 0.0);
    for (std::size_t t = 0; t < m; ++t) {
        s.objective[t] = -target[t];
        s.objective[m + t] = target[t];
    }
    s.objective[2 * m] = 1.0;
    s.objective[2 * m + 1] = -1.0;
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> row(2 * m + 2, 0.0);
        for (std::size_t t = 0; t < m; ++t) {
            row[t] = points[j][t];
            row[m + t] = -points[j][t];
        }
        row[2 * m] = -1.0;
        row[2 * m + 1] = 1.0;
        s.ub_lhs.push_back(std::move(row));
        s.ub_rhs.push_back(0.0);
    }
    for (std::size_t t = 0; t < 2 * m; ++t) {
        std::vector<double> row(2 * m + 2, 0.0);
        row[t] = 1.0;
        s.ub_lhs.push_back(std::move(row));
        s.ub_rhs.push_back(1.0);
    }
    const auto sep = lp::solve(s);
    if (sep.status == lp::Status::optimal) {
        out.separator.assign(m, 0.0);
        for (std::size_t t = 0; t < m; ++t) out.separator[t] = sep.x[t] - sep.x[m + t];
        out.margin = -sep.value;
    }
    return out;
}

struct ParetoCheck {
    bool ok = true;
    std::vector<std::string> failing_subset;
    HullMembership certificate;
};

/// Every entry's prior must lie in the convex hull of its members' singleton
/// priors. Returns the first failing subset with an infeasibility
/// certificate.
inline ParetoCheck check_coordinatewise_pareto(const RuleTable& table,
                                               double tol = consistency_tol) {
    table.validate();
    for (const auto& [key, prior] : table.entries) {
        std::vector<std::vector<double>> points;
        for (const auto& id : key) points.push_back(table.lookup({id}).weights);
        auto membership = hull_membership(points, prior.weights, tol);
        if (!membership.inside) return {false, key, std::move(membership)};
    }
    return {};
}

struct WeightRecoveryReport {
    std::vector<std::pair<std::vector<std::string>, double>> flagged_pairs;
    std::vector<std::pair<std::vector<std::string>, double>> cycle_residuals;
    double max_reproduction_error = 0.0;
    bool degenerate_geometry = false; // singleton priors on a single line
    std::string root;
};

struct WeightRecovery {
    std::map<std::string, double> weights;
    WeightRecoveryReport report;
};

/// Recovers the weight function from pair entries: each pair's prior is
/// projected onto the segment between the two singleton priors, the
/// coefficient gives the weight ratio, and ratios are propagated over a
/// spanning tree rooted at the lexicographically first id (weight 1).
/// Off-tree pairs become cycle residuals; every table entry is re-aggregated
/// with the recovered weights to measure reproduction error.
inline WeightRecovery recover_weights(const RuleTable& table) {
    table.validate();

    struct PairEdge {
        std::string a;
        std::string b;
        double ratio; // w(a) / w(b)
    };
    WeightRecovery out;
    std::vector<PairEdge> edges;
    for (const auto& [key, prior] : table.entries) {
        if (key.size() != 2) continue;
        const Prior& ga = table.lookup({key[0]});
        const Prior& gb = table.lookup({key[1]});
        const auto line = detail::project_to_line(ga.weights, gb.weights, prior.weights);
        if (line.degenerate)
            throw infeasible_error("unidentifiable",
                                   "identical singleton priors on pair {" +
                                       detail::key_string(key) +
                                       "}; the segment degenerates to a point");
        if (line.residual > pair_residual_tol) {
            out.report.flagged_pairs.emplace_back(key, line.residual);
            continue;
        }
        if (line.lambda < -consistency_tol || line.lambda > 1.0 + consistency_tol)
            throw infeasible_error("unidentifiable",
                                   "pair {" + detail::key_string(key) +
                                       "} has segment coefficient " +
                                       detail::format_number(line.lambda) +
                                       " outside [0, 1]");
        if (line.lambda <= algebra_tol || line.lambda >= 1.0 - algebra_tol)
            throw infeasible_error("unidentifiable",
                                   "pair {" + detail::key_string(key) +
                                       "} puts all weight on one expert; the "
                                       "ratio is not finite");
        edges.push_back({key[0], key[1], line.lambda / (1.0 - line.lambda)});
    }

    // Spanning tree over the pool; BFS in sorted order keeps it deterministic.
    std::map<std::string, std::vector<std::pair<std::string, double>>> adjacency;
    for (const auto& e : edges) {
        adjacency[e.a].emplace_back(e.b, e.ratio);       // w(a) = ratio * w(b)
        adjacency[e.b].emplace_back(e.a, 1.0 / e.ratio); // w(b) = (1/ratio) * w(a)
    }
    for (auto& [id, nbrs] : adjacency) std::sort(nbrs.begin(), nbrs.end());

    out.report.root = table.singletons.begin()->first;
    std::map<std::string, double> weights;
    weights[out.report.root] = 1.0;
    std::vector<std::string> frontier{out.report.root};
    std::set<std::pair<std::string, std::string>> tree_edges;
    while (!frontier.empty()) {
        std::vector<std::string> next;
        for (const auto& id : frontier) {
            for (const auto& [nbr, ratio] : adjacency[id]) {
                if (weights.count(nbr)) continue;
                // ratio here maps w(nbr) -> w(id): w(id) = ratio * w(nbr)
                weights[nbr] = weights[id] / ratio;
                tree_edges.insert({std::min(id, nbr), std::max(id, nbr)});
                next.push_back(nbr);
            }
        }
        frontier = std::move(next);
    }
    for (const auto& [id, prior] : table.singletons)
        if (!weights.count(id))
            throw infeasible_error("disconnected",
                                   "pair graph does not reach expert '" + id + "'");

    for (const auto& e : edges) {
        if (tree_edges.count({std::min(e.a, e.b), std::max(e.a, e.b)})) continue;
        const double implied = e.ratio;
        const double propagated = weights[e.a] / weights[e.b];
        const double rel = std::abs(implied - propagated) / propagated;
        out.report.cycle_residuals.emplace_back(std::vector<std::string>{e.a, e.b}, rel);
    }

    // Reproduction: every entry re-aggregated from singletons.
    for (const auto& [key, prior] : table.entries) {
        double total = 0.0;
        for (const auto& id : key) total += weights[id];
        for (std::size_t t = 0; t < prior.size(); ++t) {
            double v = 0.0;
            for (const auto& id : key) v += weights[id] / total * table.lookup({id})[t];
            out.report.max_reproduction_error =
                std::max(out.report.max_reproduction_error, std::abs(v - prior[t]));
        }
    }

    std::vector<std::vector<double>> cloud;
    for (const auto& [id, prior] : table.singletons) cloud.push_back(prior.weights);
    out.report.degenerate_geometry = detail::affine_rank(cloud) < 2;

    out.weights = std::move(weights);
    return out;
}

struct ModelSelection {
    Prior prior;
    PureRule rule;
    double value = 0.0;
};

/// The full pipeline: pool the experts' priors, then play a Bayes rule for
/// the pooled prior.
inline ModelSelection select_model(const DecisionProblem& problem,
                                   const std::vector<Expert>& experts,
                                   const AggregationRule& rule, bool ordered = false) {
    Prior pooled = ordered ? aggregate_ordered(experts, rule) : aggregate(experts, rule);
    detail::require(pooled.size() == problem.num_states(), "dim",
                    "expert priors must match the problem's states (axis: states)");
    auto best = bayes_rule(problem, pooled);
    return {std::move(pooled), std::move(best.rule), best.value};
}

} // namespace riskpool

#endif // RISKPOOL_AGGREGATION_HPP
