#ifndef RISKPOOL_IO_HPP
#define RISKPOOL_IO_HPP

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riskpool/aggregation.hpp"
#include "riskpool/applications.hpp"
#include "riskpool/decision.hpp"
#include "riskpool/errors.hpp"

namespace riskpool::io {

using nlohmann::json;

inline constexpr std::string_view tool_version = "riskpool 0.1.0";

inline json parse_json(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw validation_error("parse", origin + ": " + e.what());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("io", "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline json load_json(const std::string& path) { return parse_json(read_file(path), path); }

namespace detail_io {

inline const json& field(const json& j, const char* name, const std::string& origin) {
    if (!j.is_object() || !j.contains(name))
        throw validation_error("schema", origin + ": missing field '" + name + "'");
    return j.at(name);
}

inline std::vector<double> as_vector(const json& j, const std::string& origin) {
    if (!j.is_array()) throw validation_error("schema", origin + ": expected an array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw validation_error("schema", origin + ": expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline std::vector<std::vector<double>> as_matrix(const json& j, const std::string& origin) {
    if (!j.is_array()) throw validation_error("schema", origin + ": expected an array of rows");
    std::vector<std::vector<double>> out;
    for (const auto& row : j) out.push_back(as_vector(row, origin));
    return out;
}

inline std::vector<std::string> as_labels(const json& j, const std::string& origin) {
    if (!j.is_array()) throw validation_error("schema", origin + ": expected an array");
    std::vector<std::string> out;
    for (const auto& v : j) {
        if (!v.is_string()) throw validation_error("schema", origin + ": expected strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

} // namespace detail_io

// -------------------------------------------------------------------------
// Decision problems and rules

inline DecisionProblem problem_from_json(const json& j) {
    DecisionProblem p;
    p.states = detail_io::as_labels(detail_io::field(j, "states", "problem"), "states");
    p.outcomes = detail_io::as_labels(detail_io::field(j, "outcomes", "problem"), "outcomes");
    p.actions = detail_io::as_labels(detail_io::field(j, "actions", "problem"), "actions");
    p.likelihood = detail_io::as_matrix(detail_io::field(j, "likelihood", "problem"), "likelihood");
    p.loss = detail_io::as_matrix(detail_io::field(j, "loss", "problem"), "loss");
    p.validate();
    return p;
}

inline RandomizedRule rule_from_json(const json& j) {
    RandomizedRule rule;
    auto read_assignment = [](const json& a) {
        PureRule pure;
        for (const auto& v : detail_io::as_vector(a, "assignment")) {
            detail::require(v >= 0.0 && v == std::floor(v), "schema",
                            "rule assignments must be non-negative integers");
            pure.assignment.push_back(static_cast<std::size_t>(v));
        }
        return pure;
    };
    if (j.contains("assignment")) {
        rule = RandomizedRule::pure(read_assignment(j.at("assignment")));
    } else {
        const auto& support = detail_io::field(j, "support", "rule");
        for (const auto& item : support) {
            const double w = detail_io::field(item, "weight", "rule").get<double>();
            rule.support.emplace_back(
                read_assignment(detail_io::field(item, "assignment", "rule")), w);
        }
    }
    rule.validate();
    return rule;
}

// -------------------------------------------------------------------------
// Expert pools and rule tables

struct Pool {
    std::vector<Expert> experts;
    AggregationRule rule;
};

inline Pool pool_from_json(const json& j) {
    Pool pool;
    for (const auto& item : detail_io::field(j, "experts", "pool")) {
        Expert e;
        e.id = detail_io::field(item, "id", "expert").get<std::string>();
        e.prior.weights = detail_io::as_vector(detail_io::field(item, "prior", "expert"), "prior");
        e.prior.validate();
        if (item.contains("characteristics"))
            e.characteristics = detail_io::as_vector(item.at("characteristics"),
                                                     "characteristics");
        if (item.contains("timestamp")) {
            detail::require(item.at("timestamp").is_number(), "schema",
                            "timestamp must be a number");
            e.timestamp = item.at("timestamp").get<double>();
            detail::require(std::isfinite(*e.timestamp) && *e.timestamp >= 0.0, "range",
                            "timestamp must be finite and non-negative");
        }
        if (item.contains("multiplicity")) {
            const auto& mj = item.at("multiplicity");
            detail::require(mj.is_number_unsigned() && mj.get<std::uint64_t>() >= 1, "schema",
                            "multiplicity must be a positive integer");
            e.multiplicity = mj.get<std::uint64_t>();
        }
        pool.experts.push_back(std::move(e));
    }
    detail::require(!pool.experts.empty(), "schema", "pool has no experts");
    if (j.contains("weights"))
        for (const auto& [id, w] : j.at("weights").items())
            pool.rule.weights[id] = w.get<double>();
    else
        for (const auto& e : pool.experts) pool.rule.weights[e.id] = 1.0;
    if (j.contains("order"))
        for (const auto& [id, r] : j.at("order").items())
            pool.rule.order[id] = r.get<int>();
    else
        for (const auto& e : pool.experts) pool.rule.order[e.id] = 0;
    return pool;
}

inline RuleTable table_from_json(const json& j) {
    RuleTable table;
    for (const auto& [id, prior] : detail_io::field(j, "singletons", "table").items()) {
        Prior p;
        p.weights = detail_io::as_vector(prior, "singleton prior");
        table.singletons[id] = std::move(p);
    }
    if (j.contains("entries")) {
        for (const auto& item : j.at("entries")) {
            auto subset = detail_io::as_labels(detail_io::field(item, "subset", "entry"),
                                               "subset");
            std::sort(subset.begin(), subset.end());
            Prior p;
            p.weights = detail_io::as_vector(detail_io::field(item, "prior", "entry"), "prior");
            detail::require(table.entries.emplace(std::move(subset), std::move(p)).second,
                            "schema", "duplicate table entry");
        }
    }
    table.validate();
    return table;
}

inline TimedTable timed_table_from_json(const json& j) {
    TimedTable table;
    for (const auto& [id, prior] : detail_io::field(j, "singletons", "timed table").items()) {
        Prior p;
        p.weights = detail_io::as_vector(prior, "singleton prior");
        table.singletons[id] = std::move(p);
    }
    if (j.contains("entries")) {
        for (const auto& item : j.at("entries")) {
            std::vector<std::pair<double, std::string>> members;
            for (const auto& member : detail_io::field(item, "subset", "timed entry")) {
                const double t = detail_io::field(member, "t", "timed member").get<double>();
                members.emplace_back(
                    t, detail_io::field(member, "id", "timed member").get<std::string>());
            }
            Prior p;
            p.weights =
                detail_io::as_vector(detail_io::field(item, "prior", "timed entry"), "prior");
            table.entries.emplace_back(std::move(members), std::move(p));
        }
    }
    table.validate();
    return table;
}

inline std::vector<Prior> ballots_from_json(const json& j) {
    if (!j.is_array()) throw validation_error("schema", "ballots: expected a JSON array");
    std::vector<Prior> out;
    for (const auto& item : j) {
        Prior p;
        p.weights = detail_io::as_vector(item, "ballot");
        p.validate();
        out.push_back(std::move(p));
    }
    return out;
}

// -------------------------------------------------------------------------
// Samples CSV: header x1,...,xk,y then one row per sample.

inline std::vector<Sample> samples_from_csv(std::istream& in) {
    std::string line;
    detail::require(static_cast<bool>(std::getline(in, line)), "schema",
                    "samples CSV is empty");
    std::vector<std::string> headers;
    {
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) headers.push_back(cell);
    }
    detail::require(headers.size() >= 2 && headers.back() == "y", "schema",
                    "samples CSV header must be x1,...,xk,y");
    const std::size_t dims = headers.size() - 1;

    std::vector<Sample> out;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream row(line);
        std::string cell;
        Sample s;
        while (std::getline(row, cell, ',')) {
            try {
                s.x.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw validation_error("parse", "samples CSV line " +
                                                    std::to_string(line_no) +
                                                    ": bad number '" + cell + "'");
            }
        }
        detail::require(s.x.size() == dims + 1, "dim",
                        "samples CSV line " + std::to_string(line_no) +
                            " has the wrong number of columns");
        s.y = s.x.back();
        s.x.pop_back();
        out.push_back(std::move(s));
    }
    return out;
}

// -------------------------------------------------------------------------
// Result serialization

inline json to_json(const Prior& p) { return json(p.weights); }
inline json to_json(const RiskProfile& r) { return json(r.values); }

inline json to_json(const PureRule& r) {
    json j;
    j["assignment"] = r.assignment;
    return j;
}

inline json to_json(const CompleteClassCertificate& c) {
    json j;
    j["profile_index"] = c.profile_index;
    j["supporting_prior"] = c.supporting_prior.weights;
    j["bayes_value"] = c.bayes_value;
    j["gap"] = c.gap;
    return j;
}

inline const char* name_of(ConsistencyVerdict v) {
    switch (v) {
    case ConsistencyVerdict::consistent: return "consistent";
    case ConsistencyVerdict::weakly_consistent_only: return "weakly_consistent_only";
    case ConsistencyVerdict::inconsistent: return "inconsistent";
    }
    return "?";
}

inline json to_json(const ConsistencyReport& r) {
    json j;
    j["verdict"] = name_of(r.verdict);
    j["checked_pairs"] = r.checked_pairs;
    j["violations"] = json::array();
    for (const auto& v : r.violations) {
        json item;
        item["a"] = v.set_a;
        item["b"] = v.set_b;
        item["kind"] = v.kind;
        item["detail"] = v.detail;
        j["violations"].push_back(std::move(item));
    }
    return j;
}

inline json to_json(const WeightRecovery& r) {
    json j;
    j["weights"] = r.weights;
    json report;
    report["root"] = r.report.root;
    report["max_reproduction_error"] = r.report.max_reproduction_error;
    report["degenerate_geometry"] = r.report.degenerate_geometry;
    report["flagged_pairs"] = json::array();
    for (const auto& [key, residual] : r.report.flagged_pairs)
        report["flagged_pairs"].push_back({{"pair", key}, {"residual", residual}});
    report["cycle_residuals"] = json::array();
    for (const auto& [key, residual] : r.report.cycle_residuals)
        report["cycle_residuals"].push_back({{"pair", key}, {"residual", residual}});
    j["report"] = std::move(report);
    return j;
}

inline json to_json(const DiscountRecovery& r) {
    json j;
    j["q"] = r.q;
    j["weights"] = r.weights;
    json report;
    report["q_source"] = r.report.q_source;
    report["max_reproduction_error"] = r.report.max_reproduction_error;
    report["residuals"] = json::array();
    for (const auto& [label, residual] : r.report.residuals)
        report["residuals"].push_back({{"check", label}, {"residual", residual}});
    j["report"] = std::move(report);
    return j;
}

// -------------------------------------------------------------------------
// Run manifest, embedded verbatim in every output for reproducibility.

struct RunManifest {
    std::string command;
    std::map<std::string, std::string> inputs;
    std::optional<std::uint64_t> seed;
    std::map<std::string, double> tolerance_overrides;
    std::string out = "-";
    std::string version{tool_version};
    std::string rng{rng::generator_id};
};

inline json to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["inputs"] = m.inputs;
    if (m.seed)
        j["seed"] = *m.seed;
    else
        j["seed"] = nullptr;
    j["tolerance_overrides"] = m.tolerance_overrides;
    j["out"] = m.out;
    j["tool_version"] = m.version;
    j["rng"] = m.rng;
    return j;
}

} // namespace riskpool::io

#endif // RISKPOOL_IO_HPP
