// Batch front-end: file ingestion, command dispatch, deterministic outputs.
// Every output embeds the run manifest; JSON goes to --out (default stdout),
// tabular results are CSV with the manifest in a leading comment line.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "riskpool/io.hpp"
#include "riskpool/riskpool.hpp"

namespace {

using riskpool::io::json;
using riskpool::io::RunManifest;

unsigned worker_threads() {
    const char* env = std::getenv("AGG_ENGINE_THREADS");
    unsigned n = 0;
    if (env && *env) {
        try {
            n = static_cast<unsigned>(std::stoul(env));
        } catch (const std::exception&) {
            throw riskpool::validation_error("range",
                                             "AGG_ENGINE_THREADS must be a number");
        }
    }
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return std::min(n, 64u);
}

void write_text(const std::string& out_path, const std::string& text) {
    if (out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw riskpool::validation_error("io", "cannot write '" + out_path + "'");
    out << text;
}

void emit_json(const RunManifest& manifest, json payload) {
    json body;
    body["manifest"] = riskpool::io::to_json(manifest);
    for (auto& [key, value] : payload.items()) body[key] = std::move(value);
    write_text(manifest.out, body.dump() + "\n");
}

void emit_csv(const RunManifest& manifest, const std::string& csv) {
    write_text(manifest.out,
               "# manifest " + riskpool::io::to_json(manifest).dump() + "\n" + csv);
}

std::vector<double> parse_number_list(const std::string& text, const std::string& origin) {
    std::vector<double> out;
    std::stringstream stream(text);
    std::string cell;
    while (std::getline(stream, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw riskpool::validation_error("parse",
                                             origin + ": bad number '" + cell + "'");
        }
    }
    if (out.empty())
        throw riskpool::validation_error("parse", origin + ": empty number list");
    return out;
}

std::vector<std::vector<double>> parse_vector_list(const std::string& text,
                                                   const std::string& origin) {
    std::vector<std::vector<double>> out;
    std::stringstream stream(text);
    std::string group;
    while (std::getline(stream, group, ';'))
        out.push_back(parse_number_list(group, origin));
    if (out.empty())
        throw riskpool::validation_error("parse", origin + ": empty vector list");
    return out;
}

riskpool::KernelShape kernel_shape_from(const std::string& name) {
    if (name == "gaussian") return riskpool::KernelShape::gaussian;
    if (name == "epanechnikov") return riskpool::KernelShape::epanechnikov;
    if (name == "tricube") return riskpool::KernelShape::tricube;
    if (name == "boxcar") return riskpool::KernelShape::boxcar;
    throw riskpool::validation_error("schema", "unknown kernel shape '" + name + "'");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite decision problems, admissibility certificates, and "
                 "consistent prior pooling"};
    app.require_subcommand(1);

    std::string problem_path;
    std::string rule_path;
    std::string pool_path;
    std::string table_path;
    std::string samples_arg;
    std::string ballots_path;
    std::string query_arg;
    std::string kernel_name = "gaussian";
    std::string theta_arg;
    std::string weights_arg;
    std::string mode_arg = "strict";
    std::string out_path = "-";
    double bandwidth = 1.0;
    double discount = 1.0;
    std::optional<double> tol_override;
    std::size_t index = 0;
    std::uint64_t cap = 100000;
    std::size_t dimension = 3;
    std::uint64_t seed = 0;
    bool ordered = false;

    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", out_path, "Output path, '-' for stdout");
    };
    auto manifest_for = [&](const std::string& command) {
        RunManifest m;
        m.command = command;
        m.out = out_path;
        return m;
    };

    // --- risk -------------------------------------------------------------
    auto* risk_cmd = app.add_subcommand("risk", "Risk profile of a rule");
    risk_cmd->add_option("--problem", problem_path, "Problem JSON")->required();
    risk_cmd->add_option("--rule", rule_path, "Rule JSON")->required();
    add_out(risk_cmd);
    risk_cmd->callback([&] {
        auto manifest = manifest_for("risk");
        manifest.inputs = {{"problem", problem_path}, {"rule", rule_path}};
        const auto problem = riskpool::io::problem_from_json(riskpool::io::load_json(problem_path));
        const auto rule = riskpool::io::rule_from_json(riskpool::io::load_json(rule_path));
        const auto profile = riskpool::risk_profile(problem, rule);
        emit_json(manifest, {{"risk_profile", profile.values}});
    });

    // --- admissible ---------------------------------------------------------
    auto* adm_cmd = app.add_subcommand("admissible", "Admissible pure rules");
    adm_cmd->add_option("--problem", problem_path, "Problem JSON")->required();
    adm_cmd->add_option("--cap", cap, "Pure-rule enumeration cap");
    add_out(adm_cmd);
    adm_cmd->callback([&] {
        auto manifest = manifest_for("admissible");
        manifest.inputs = {{"problem", problem_path}};
        const auto problem = riskpool::io::problem_from_json(riskpool::io::load_json(problem_path));
        const auto entries = riskpool::enumerate_risk_set(problem, cap);
        std::vector<riskpool::RiskProfile> profiles;
        for (const auto& e : entries) profiles.push_back(e.profile);
        const auto admissible = riskpool::admissible_profiles(profiles);
        json rows = json::array();
        for (std::size_t i : admissible)
            rows.push_back({{"index", i},
                            {"assignment", entries[i].rule.assignment},
                            {"profile", entries[i].profile.values}});
        emit_json(manifest, {{"rule_count", entries.size()}, {"admissible", rows}});
    });

    // --- support ------------------------------------------------------------
    auto* support_cmd = app.add_subcommand("support", "Supporting-prior certificate");
    support_cmd->add_option("--problem", problem_path, "Problem JSON")->required();
    support_cmd->add_option("--index", index, "Pure-rule index")->required();
    support_cmd->add_option("--cap", cap, "Pure-rule enumeration cap");
    add_out(support_cmd);
    support_cmd->callback([&] {
        auto manifest = manifest_for("support");
        manifest.inputs = {{"problem", problem_path}, {"index", std::to_string(index)}};
        const auto problem = riskpool::io::problem_from_json(riskpool::io::load_json(problem_path));
        const auto entries = riskpool::enumerate_risk_set(problem, cap);
        std::vector<riskpool::RiskProfile> profiles;
        for (const auto& e : entries) profiles.push_back(e.profile);
        const auto cert = riskpool::supporting_prior(profiles, index);
        emit_json(manifest, {{"certificate", riskpool::io::to_json(cert)}});
    });

    // --- aggregate / aggregate-ordered ---------------------------------------
    auto aggregate_handler = [&](const std::string& command, bool use_order) {
        auto manifest = manifest_for(command);
        manifest.inputs = {{"pool", pool_path}};
        const auto pool = riskpool::io::pool_from_json(riskpool::io::load_json(pool_path));
        riskpool::Prior prior;
        if (use_order) {
            prior = riskpool::aggregate_ordered(pool.experts, pool.rule);
        } else {
            std::vector<std::pair<riskpool::Expert, std::uint64_t>> counted;
            for (const auto& e : pool.experts) counted.emplace_back(e, e.multiplicity);
            prior = riskpool::aggregate_with_multiplicity(counted, pool.rule.weights);
        }
        emit_json(manifest, {{"prior", prior.weights}});
    };
    auto* agg_cmd = app.add_subcommand("aggregate", "Pool expert priors");
    agg_cmd->add_option("--pool", pool_path, "Pool JSON")->required();
    add_out(agg_cmd);
    agg_cmd->callback([&] { aggregate_handler("aggregate", false); });

    auto* agg_ord_cmd =
        app.add_subcommand("aggregate-ordered", "Pool only the top-ranked experts");
    agg_ord_cmd->add_option("--pool", pool_path, "Pool JSON")->required();
    add_out(agg_ord_cmd);
    agg_ord_cmd->callback([&] { aggregate_handler("aggregate-ordered", true); });

    // --- select ---------------------------------------------------------------
    auto* select_cmd = app.add_subcommand("select", "Pool priors and play the Bayes rule");
    select_cmd->add_option("--problem", problem_path, "Problem JSON")->required();
    select_cmd->add_option("--pool", pool_path, "Pool JSON")->required();
    select_cmd->add_flag("--ordered", ordered, "Use the weak order");
    add_out(select_cmd);
    select_cmd->callback([&] {
        auto manifest = manifest_for("select");
        manifest.inputs = {{"problem", problem_path}, {"pool", pool_path}};
        const auto problem = riskpool::io::problem_from_json(riskpool::io::load_json(problem_path));
        const auto pool = riskpool::io::pool_from_json(riskpool::io::load_json(pool_path));
        const auto selection =
            riskpool::select_model(problem, pool.experts, pool.rule, ordered);
        emit_json(manifest, {{"prior", selection.prior.weights},
                             {"rule", riskpool::io::to_json(selection.rule)},
                             {"value", selection.value}});
    });

    // --- check-consistency ------------------------------------------------------
    auto* check_cmd = app.add_subcommand("check-consistency", "Check a rule table");
    check_cmd->add_option("--table", table_path, "Rule table JSON")->required();
    check_cmd->add_option("--mode", mode_arg, "weak or strict")
        ->check(CLI::IsMember({"weak", "strict"}));
    check_cmd->add_option("--tol", tol_override, "Segment tolerance override");
    add_out(check_cmd);
    check_cmd->callback([&] {
        auto manifest = manifest_for("check-consistency");
        manifest.inputs = {{"table", table_path}, {"mode", mode_arg}};
        if (tol_override) manifest.tolerance_overrides["segment"] = *tol_override;
        const auto table = riskpool::io::table_from_json(riskpool::io::load_json(table_path));
        const auto mode = mode_arg == "weak" ? riskpool::ConsistencyMode::weak
                                             : riskpool::ConsistencyMode::strict;
        const auto report = riskpool::check_consistency(
            table, mode, tol_override.value_or(riskpool::consistency_tol));
        emit_json(manifest, {{"report", riskpool::io::to_json(report)}});
    });

    // --- recover-weights ----------------------------------------------------------
    auto* recover_cmd = app.add_subcommand("recover-weights", "Recover weights from a table");
    recover_cmd->add_option("--table", table_path, "Rule table JSON")->required();
    add_out(recover_cmd);
    recover_cmd->callback([&] {
        auto manifest = manifest_for("recover-weights");
        manifest.inputs = {{"table", table_path}};
        const auto table = riskpool::io::table_from_json(riskpool::io::load_json(table_path));
        emit_json(manifest, riskpool::io::to_json(riskpool::recover_weights(table)));
    });

    // --- smooth ---------------------------------------------------------------
    auto* smooth_cmd = app.add_subcommand("smooth", "Nadaraya-Watson smoothing");
    smooth_cmd->add_option("--samples", samples_arg, "Samples CSV")->required();
    smooth_cmd->add_option("--query", query_arg, "Query point, comma-separated")->required();
    smooth_cmd->add_option("--kernel", kernel_name,
                           "gaussian, epanechnikov, tricube, or boxcar");
    smooth_cmd->add_option("--bandwidth", bandwidth, "Kernel bandwidth");
    add_out(smooth_cmd);
    smooth_cmd->callback([&] {
        auto manifest = manifest_for("smooth");
        manifest.inputs = {{"samples", samples_arg},
                           {"query", query_arg},
                           {"kernel", kernel_name},
                           {"bandwidth", std::to_string(bandwidth)}};
        std::ifstream in(samples_arg);
        if (!in) throw riskpool::validation_error("io", "cannot open '" + samples_arg + "'");
        const auto samples = riskpool::io::samples_from_csv(in);
        const auto query = parse_number_list(query_arg, "query");
        riskpool::KernelSpec kernel;
        kernel.shape = kernel_shape_from(kernel_name);
        kernel.bandwidth = bandwidth;
        emit_json(manifest, {{"value", riskpool::nw_smooth(samples, query, kernel)}});
    });

    // --- timed ---------------------------------------------------------------
    auto* timed_cmd = app.add_subcommand("timed", "Discounted pooling of timestamped experts");
    timed_cmd->add_option("--pool", pool_path, "Pool JSON with timestamps")->required();
    timed_cmd->add_option("--q", discount, "Discount factor")->required();
    add_out(timed_cmd);
    timed_cmd->callback([&] {
        auto manifest = manifest_for("timed");
        manifest.inputs = {{"pool", pool_path}, {"q", std::to_string(discount)}};
        const auto pool = riskpool::io::pool_from_json(riskpool::io::load_json(pool_path));
        std::vector<riskpool::TimedExpert> timed;
        for (const auto& e : pool.experts) {
            riskpool::detail::require(e.timestamp.has_value(), "schema",
                                      "expert '" + e.id + "' has no timestamp");
            timed.push_back({*e.timestamp, e});
        }
        emit_json(manifest,
                  {{"prior", riskpool::aggregate_timed(timed, discount, pool.rule.weights)
                                 .weights}});
    });

    // --- recover-discount -------------------------------------------------------
    auto* discount_cmd =
        app.add_subcommand("recover-discount", "Recover the discount factor and weights");
    discount_cmd->add_option("--table", table_path, "Timed table JSON")->required();
    add_out(discount_cmd);
    discount_cmd->callback([&] {
        auto manifest = manifest_for("recover-discount");
        manifest.inputs = {{"table", table_path}};
        const auto table =
            riskpool::io::timed_table_from_json(riskpool::io::load_json(table_path));
        emit_json(manifest, riskpool::io::to_json(riskpool::recover_discount(table)));
    });

    // --- vote ---------------------------------------------------------------
    auto* vote_cmd = app.add_subcommand("vote", "Weighted average of ballots");
    vote_cmd->add_option("--ballots", ballots_path, "Ballots JSON (array of priors)")
        ->required();
    vote_cmd->add_option("--weights", weights_arg, "Comma-separated ballot weights");
    add_out(vote_cmd);
    vote_cmd->callback([&] {
        auto manifest = manifest_for("vote");
        manifest.inputs = {{"ballots", ballots_path}};
        if (!weights_arg.empty()) manifest.inputs["weights"] = weights_arg;
        const auto ballots =
            riskpool::io::ballots_from_json(riskpool::io::load_json(ballots_path));
        std::vector<double> weights(ballots.size(), 1.0);
        if (!weights_arg.empty()) weights = parse_number_list(weights_arg, "weights");
        emit_json(manifest, {{"prior", riskpool::vote(ballots, weights).weights}});
    });

    // --- js-demo ---------------------------------------------------------------
    auto* js_cmd = app.add_subcommand("js-demo", "Mean vs James-Stein dominance report");
    js_cmd->add_option("--d", dimension, "Dimension (>= 3)")->required();
    std::size_t sample_count = 1000000;
    js_cmd->add_option("--samples", sample_count, "Monte-Carlo sample count");
    js_cmd->add_option("--seed", seed, "Generator seed");
    js_cmd->add_option("--theta", theta_arg,
                       "Semicolon-separated grid of theta vectors (default: origin)");
    add_out(js_cmd);
    js_cmd->callback([&] {
        auto manifest = manifest_for("js-demo");
        manifest.inputs = {{"d", std::to_string(dimension)},
                           {"samples", std::to_string(sample_count)}};
        if (!theta_arg.empty()) manifest.inputs["theta"] = theta_arg;
        manifest.seed = seed;
        std::vector<std::vector<double>> grid;
        if (theta_arg.empty())
            grid.push_back(std::vector<double>(dimension, 0.0));
        else
            grid = parse_vector_list(theta_arg, "theta");
        for (const auto& theta : grid)
            riskpool::detail::require(theta.size() == dimension, "dim",
                                      "theta vectors must have length d");
        const auto rows = riskpool::dominance_report(dimension, grid, sample_count, seed,
                                                     worker_threads());
        emit_csv(manifest, riskpool::dominance_report_csv(rows, sample_count, seed));
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "ERR:usage:" << e.what() << "\n";
        return 1;
    } catch (const riskpool::validation_error& e) {
        std::cerr << "ERR:" << e.code() << ":" << e.what() << "\n";
        return 1;
    } catch (const riskpool::infeasible_error& e) {
        std::cerr << "ERR:" << e.code() << ":" << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "ERR:internal:" << e.what() << "\n";
        return 1;
    }
    return 0;
}
