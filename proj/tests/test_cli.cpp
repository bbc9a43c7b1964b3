// End-to-end checks of the command-line front end. Each invocation writes to
// files under a scratch directory; determinism is checked byte-for-byte.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "riskpool/io.hpp"

namespace fs = std::filesystem;
using riskpool::io::json;

namespace {

const fs::path scratch = fs::path("cli_scratch");

struct RunResult {
    int exit_code = 0;
    std::string output;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out);
    out << text;
}

RunResult run_cli(const std::string& args, const std::string& tag) {
    const fs::path out = scratch / (tag + ".out");
    const fs::path err = scratch / (tag + ".err");
    const std::string command = std::string(RISKPOOL_CLI_PATH) + " " + args + " > " +
                                out.string() + " 2> " + err.string();
    const int status = std::system(command.c_str());
    RunResult r;
    r.exit_code = WEXITSTATUS(status);
    r.output = slurp(out) + slurp(err);
    return r;
}

void write_fixtures() {
    fs::create_directories(scratch);
    spit(scratch / "problem.json", R"({
        "states": ["s0", "s1"],
        "outcomes": ["x0", "x1"],
        "actions": ["a0", "a1"],
        "likelihood": [[1.0, 0.0], [0.0, 1.0]],
        "loss": [[0.0, 1.0], [1.0, 0.0]]
    })");
    spit(scratch / "rule.json", R"({"assignment": [1, 1]})");
    spit(scratch / "blind_problem.json", R"({
        "states": ["s0", "s1"],
        "outcomes": ["x0"],
        "actions": ["a0", "a1"],
        "likelihood": [[1.0], [1.0]],
        "loss": [[0.0, 1.0], [1.0, 0.0]]
    })");
    spit(scratch / "pool.json", R"({
        "experts": [
            {"id": "a", "prior": [1.0, 0.0]},
            {"id": "b", "prior": [0.0, 1.0]}
        ],
        "weights": {"a": 1.0, "b": 1.0},
        "order": {"a": 0, "b": 0}
    })");
    spit(scratch / "table.json", R"({
        "singletons": {"a": [1.0, 0.0], "b": [0.0, 1.0]},
        "entries": [{"subset": ["a", "b"], "prior": [0.25, 0.75]}]
    })");
    spit(scratch / "samples.csv", "x1,y\n0.0,0.0\n1.0,1.0\n");
    spit(scratch / "ballots.json", R"([[1.0, 0.0], [0.0, 1.0]])");
    spit(scratch / "timed_pool.json", R"({
        "experts": [
            {"id": "a", "prior": [1.0, 0.0], "timestamp": 0.0},
            {"id": "b", "prior": [0.0, 1.0], "timestamp": 1.0}
        ]
    })");
}

} // namespace

TEST_CASE("aggregate prints the pooled prior with a manifest") {
    write_fixtures();
    const auto r = run_cli("aggregate --pool " + (scratch / "pool.json").string(), "agg");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.find("[0.5,0.5]") != std::string::npos);
    const auto body = json::parse(r.output);
    CHECK(body["manifest"]["command"] == "aggregate");
    CHECK(body["prior"] == json::array({0.5, 0.5}));
}

TEST_CASE("aggregate output is a fixed point when fed back as a singleton pool") {
    write_fixtures();
    const auto r = run_cli("aggregate --pool " + (scratch / "pool.json").string(), "agg_fp");
    REQUIRE(r.exit_code == 0);
    const auto prior = json::parse(r.output)["prior"];
    json pool;
    pool["experts"] = json::array({{{"id", "pooled"}, {"prior", prior}}});
    spit(scratch / "pool_fp.json", pool.dump());
    const auto again =
        run_cli("aggregate --pool " + (scratch / "pool_fp.json").string(), "agg_fp2");
    REQUIRE(again.exit_code == 0);
    CHECK(json::parse(again.output)["prior"] == prior);
}

TEST_CASE("risk, admissible, support and select run end to end") {
    write_fixtures();
    const std::string problem = (scratch / "problem.json").string();

    const auto risk = run_cli("risk --problem " + problem + " --rule " +
                                  (scratch / "rule.json").string(),
                              "risk");
    REQUIRE(risk.exit_code == 0);
    CHECK(json::parse(risk.output)["risk_profile"] == json::array({1.0, 0.0}));

    const auto adm = run_cli("admissible --problem " + problem, "adm");
    REQUIRE(adm.exit_code == 0);
    const auto adm_body = json::parse(adm.output);
    CHECK(adm_body["rule_count"] == 4);
    // Pure rules in lexicographic order; (a0,a1) has profile [0,0].
    CHECK(adm_body["admissible"].size() == 1);
    CHECK(adm_body["admissible"][0]["index"] == 1);

    const auto support = run_cli("support --problem " + problem + " --index 1", "support");
    REQUIRE(support.exit_code == 0);
    const auto cert = json::parse(support.output)["certificate"];
    CHECK(cert["gap"].get<double>() <= 1e-9);

    // Risk set {[0,1], [1,0]}: both pure rules are admissible.
    const auto blind = run_cli("support --problem " +
                                   (scratch / "blind_problem.json").string() + " --index 0",
                               "support_blind");
    REQUIRE(blind.exit_code == 0);
    CHECK(json::parse(blind.output)["certificate"]["gap"].get<double>() <= 1e-9);

    const auto select = run_cli("select --problem " + problem + " --pool " +
                                    (scratch / "pool.json").string(),
                                "select");
    REQUIRE(select.exit_code == 0);
    const auto sel = json::parse(select.output);
    CHECK(sel["value"].get<double>() == 0.0);
    CHECK(sel["rule"]["assignment"] == json::array({0, 1}));
}

TEST_CASE("support on a dominated index exits with code 2") {
    write_fixtures();
    const auto r = run_cli("support --problem " + (scratch / "problem.json").string() +
                               " --index 2",
                           "support_bad");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("ERR:infeasible:") != std::string::npos);
}

TEST_CASE("malformed input exits with code 1 and an ERR prefix") {
    write_fixtures();
    spit(scratch / "broken.json", "{");
    const auto r = run_cli("aggregate --pool " + (scratch / "broken.json").string(), "broken");
    CHECK(r.exit_code == 1);
    CHECK(r.output.rfind("ERR:", 0) == 0);

    const auto unknown = run_cli("no-such-command", "unknown");
    CHECK(unknown.exit_code == 1);
    CHECK(unknown.output.rfind("ERR:usage:", 0) == 0);
}

TEST_CASE("table commands, smoothing, timed pooling and voting work") {
    write_fixtures();
    const auto check = run_cli("check-consistency --table " +
                                   (scratch / "table.json").string(),
                               "check");
    REQUIRE(check.exit_code == 0);
    CHECK(json::parse(check.output)["report"]["verdict"] == "consistent");

    const auto recover = run_cli("recover-weights --table " +
                                     (scratch / "table.json").string(),
                                 "recover");
    REQUIRE(recover.exit_code == 0);
    const auto weights = json::parse(recover.output)["weights"];
    CHECK(weights["a"].get<double>() / weights["b"].get<double>() ==
          Catch::Approx(1.0 / 3.0).epsilon(1e-9));

    const auto smooth = run_cli("smooth --samples " + (scratch / "samples.csv").string() +
                                    " --query 0.0 --kernel gaussian --bandwidth 1.0",
                                "smooth");
    REQUIRE(smooth.exit_code == 0);
    const double expected = std::exp(-0.5) / (1.0 + std::exp(-0.5));
    CHECK(json::parse(smooth.output)["value"].get<double>() ==
          Catch::Approx(expected).margin(1e-9));

    const auto timed = run_cli("timed --pool " + (scratch / "timed_pool.json").string() +
                                   " --q 0.5",
                               "timed");
    REQUIRE(timed.exit_code == 0);
    const auto timed_prior = json::parse(timed.output)["prior"];
    CHECK(timed_prior[0].get<double>() == Catch::Approx(2.0 / 3.0).margin(1e-12));

    const auto voted = run_cli("vote --ballots " + (scratch / "ballots.json").string() +
                                   " --weights 1,1",
                               "vote");
    REQUIRE(voted.exit_code == 0);
    CHECK(json::parse(voted.output)["prior"] == json::array({0.5, 0.5}));
}

TEST_CASE("js-demo emits the CSV report with a manifest comment") {
    write_fixtures();
    const auto r = run_cli("js-demo --d 5 --samples 20000 --seed 42", "js");
    REQUIRE(r.exit_code == 0);
    CHECK(r.output.rfind("# manifest ", 0) == 0);
    CHECK(r.output.find("theta_label,estimator,risk,std_error,samples,seed,dominant_flag") !=
          std::string::npos);
    CHECK(r.output.find(",james_stein,") != std::string::npos);

    const auto bad = run_cli("js-demo --d 2 --samples 100 --seed 1", "js_bad");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("ERR:domain:") != std::string::npos);
}

TEST_CASE("every command is byte-identical across re-runs") {
    write_fixtures();
    const std::string problem = (scratch / "problem.json").string();
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"risk --problem " + problem + " --rule " + (scratch / "rule.json").string(), "d0"},
        {"admissible --problem " + problem, "d1"},
        {"support --problem " + problem + " --index 1", "d2"},
        {"aggregate --pool " + (scratch / "pool.json").string(), "d3"},
        {"aggregate-ordered --pool " + (scratch / "pool.json").string(), "d4"},
        {"select --problem " + problem + " --pool " + (scratch / "pool.json").string(), "d5"},
        {"check-consistency --table " + (scratch / "table.json").string(), "d6"},
        {"recover-weights --table " + (scratch / "table.json").string(), "d7"},
        {"smooth --samples " + (scratch / "samples.csv").string() + " --query 0.5", "d8"},
        {"timed --pool " + (scratch / "timed_pool.json").string() + " --q 2.0", "d9"},
        {"vote --ballots " + (scratch / "ballots.json").string(), "d10"},
        {"js-demo --d 3 --samples 5000 --seed 7", "d11"},
    };
    for (const auto& [args, tag] : commands) {
        const auto first = run_cli(args, tag + "_a");
        const auto second = run_cli(args, tag + "_b");
        REQUIRE(first.exit_code == 0);
        CHECK(first.output == second.output);
    }
}
