#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "riskpool/admissibility.hpp"
#include "test_support.hpp"

using namespace riskpool;
namespace ts = test_support;

namespace {

RiskProfile rp(std::vector<double> v) { return RiskProfile{std::move(v)}; }

DecisionProblem blind_2x1x2() {
    DecisionProblem p;
    p.states = {"s0", "s1"};
    p.outcomes = {"x0"};
    p.actions = {"a0", "a1"};
    p.likelihood = {{1.0}, {1.0}};
    p.loss = {{0.0, 1.0}, {1.0, 0.0}};
    return p;
}

} // namespace

TEST_CASE("dominance verdicts on the textbook cases") {
    CHECK(dominance(rp({1, 2}), rp({2, 2})) == DominanceVerdict::dominates);
    CHECK(dominance(rp({2, 2}), rp({1, 2})) == DominanceVerdict::dominated_by);
    CHECK(dominance(rp({1, 2}), rp({1, 2})) == DominanceVerdict::equal);
    CHECK(dominance(rp({1, 2}), rp({2, 1})) == DominanceVerdict::incomparable);
    CHECK_THROWS_AS(dominance(rp({1}), rp({1, 2})), validation_error);

    // Differences below the strictness threshold count as ties.
    CHECK(dominance(rp({1.0, 2.0}), rp({1.0 + 1e-13, 2.0})) == DominanceVerdict::equal);
}

TEST_CASE("dominance is an antisymmetric strict partial order") {
    std::mt19937_64 gen(21);
    auto random_profile = [&](std::size_t m) {
        std::vector<double> v(m);
        for (auto& x : v) x = ts::uniform01(gen) < 0.3 ? 0.5 : ts::uniform01(gen);
        return rp(std::move(v));
    };
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t m = ts::uniform_index(gen, 1, 4);
        const auto a = random_profile(m);
        const auto b = random_profile(m);
        const auto c = random_profile(m);

        CHECK(dominance(a, a) == DominanceVerdict::equal); // irreflexive in `dominates`

        const auto ab = dominance(a, b);
        const auto ba = dominance(b, a);
        if (ab == DominanceVerdict::dominates) CHECK(ba == DominanceVerdict::dominated_by);
        if (ab == DominanceVerdict::equal) CHECK(ba == DominanceVerdict::equal);
        if (ab == DominanceVerdict::incomparable) CHECK(ba == DominanceVerdict::incomparable);

        if (ab == DominanceVerdict::dominates &&
            dominance(b, c) == DominanceVerdict::dominates)
            CHECK(dominance(a, c) == DominanceVerdict::dominates);
    }
}

TEST_CASE("admissible profiles against hull domination") {
    CHECK(admissible_profiles({rp({0, 1}), rp({1, 0}), rp({1, 1})}) ==
          std::vector<std::size_t>{0, 1});
    CHECK(admissible_profiles({rp({0, 1}), rp({1, 0}), rp({0.4, 0.4})}) ==
          std::vector<std::size_t>{0, 1, 2});
    CHECK(admissible_profiles({rp({3, 7})}) == std::vector<std::size_t>{0});

    // The midpoint of two admissible vertices is itself admissible; a point
    // just above it is hull-dominated though pairwise undominated.
    CHECK(admissible_profiles({rp({0, 1}), rp({1, 0}), rp({0.6, 0.6})}) ==
          std::vector<std::size_t>{0, 1});
}

TEST_CASE("admissible profiles agree with the grid-search oracle") {
    std::mt19937_64 gen(22);
    // Known hand-checked instances first.
    std::vector<std::vector<RiskProfile>> instances = {
        {rp({0, 1}), rp({1, 0}), rp({1, 1})},
        {rp({0, 1}), rp({1, 0}), rp({0.4, 0.4})},
    };
    for (int rep = 0; rep < 5; ++rep) {
        const std::size_t m = ts::uniform_index(gen, 2, 3);
        const std::size_t count = ts::uniform_index(gen, 3, rep == 0 ? 6 : 5);
        std::vector<RiskProfile> profiles;
        for (std::size_t i = 0; i < count; ++i) {
            std::vector<double> v(m);
            for (auto& x : v) x = ts::uniform01(gen);
            profiles.push_back(rp(std::move(v)));
        }
        instances.push_back(std::move(profiles));
    }
    for (const auto& profiles : instances) {
        const auto admissible = admissible_profiles(profiles);
        for (std::size_t i = 0; i < profiles.size(); ++i) {
            const bool in_set =
                std::find(admissible.begin(), admissible.end(), i) != admissible.end();
            CHECK(in_set == !ts::grid_dominated(profiles, i, 100));
        }
    }
}

TEST_CASE("supporting priors certify hand-checked instances") {
    const std::vector<RiskProfile> two = {rp({0, 1}), rp({1, 0})};

    // Feasibility of [1, 0] by direct substitution, independent of the LP.
    CHECK(1.0 * 0.0 + 0.0 * 1.0 <= 1.0 * 1.0 + 0.0 * 0.0);

    const auto cert = supporting_prior(two, 0);
    CHECK(cert.profile_index == 0);
    CHECK(cert.gap <= 1e-9);
    // Lexicographically smallest feasible prior: pi_0 = pi_1 = 1/2.
    CHECK(cert.supporting_prior[0] == Catch::Approx(0.5).margin(1e-9));
    CHECK(cert.supporting_prior[1] == Catch::Approx(0.5).margin(1e-9));

    const auto single = supporting_prior({rp({0.3})}, 0);
    CHECK(single.supporting_prior.weights == std::vector<double>{1.0});

    const std::vector<RiskProfile> three = {rp({0, 1}), rp({1, 0}), rp({0.4, 0.4})};
    const auto mid = supporting_prior(three, 2);
    CHECK(mid.gap <= 1e-9);
    // Hand-solved feasibility interval for pi_0.
    CHECK(mid.supporting_prior[0] >= 0.4 - 1e-9);
    CHECK(mid.supporting_prior[0] <= 0.6 + 1e-9);
    CHECK(mid.supporting_prior[1] == Catch::Approx(1.0 - mid.supporting_prior[0]).margin(1e-9));
    // The deterministic rule lands on the lexicographic minimum, 0.4.
    CHECK(mid.supporting_prior[0] == Catch::Approx(0.4).margin(1e-9));
}

TEST_CASE("supporting prior rejects dominated profiles with a witness") {
    const std::vector<RiskProfile> profiles = {rp({0, 1}), rp({1, 0}), rp({1, 1})};
    CHECK_THROWS_AS(supporting_prior(profiles, 2), infeasible_error);
    try {
        supporting_prior(profiles, 2);
    } catch (const infeasible_error& e) {
        CHECK(std::string(e.what()).find("dominated") != std::string::npos);
    }
}

TEST_CASE("every admissible profile of random problems has a certificate") {
    std::mt19937_64 gen(23);
    for (int rep = 0; rep < 30; ++rep) {
        const auto problem = ts::random_problem(gen);
        std::vector<RiskProfile> profiles;
        for (const auto& e : enumerate_risk_set(problem)) profiles.push_back(e.profile);
        for (std::size_t index : admissible_profiles(profiles)) {
            const auto cert = supporting_prior(profiles, index);
            CHECK(cert.gap <= 1e-9);
            cert.supporting_prior.validate();
        }
    }
}

TEST_CASE("Bayes rules for strictly positive priors are admissible") {
    std::mt19937_64 gen(24);
    for (int rep = 0; rep < 30; ++rep) {
        const auto problem = ts::random_problem(gen);
        const auto prior = ts::random_prior(gen, problem.num_states(), 0.05);
        const auto best = bayes_rule(problem, prior);
        std::vector<RiskProfile> profiles;
        std::size_t best_index = 0;
        const auto entries = enumerate_risk_set(problem);
        for (std::size_t i = 0; i < entries.size(); ++i) {
            profiles.push_back(entries[i].profile);
            if (entries[i].rule.assignment == best.rule.assignment) best_index = i;
        }
        const auto admissible = admissible_profiles(profiles);
        CHECK(std::find(admissible.begin(), admissible.end(), best_index) != admissible.end());
    }
}

TEST_CASE("is_bayes_for checks optimality of a rule under a prior") {
    const auto problem = blind_2x1x2();
    const Prior prior{{0.9, 0.1}};
    const auto best = bayes_rule(problem, prior);
    CHECK(is_bayes_for(problem, RandomizedRule::pure(best.rule), prior));
    CHECK_FALSE(is_bayes_for(problem, RandomizedRule::pure({{1}}), prior));

    DecisionProblem one_state;
    one_state.states = {"s0"};
    one_state.outcomes = {"x0"};
    one_state.actions = {"a0", "a1"};
    one_state.likelihood = {{1.0}};
    one_state.loss = {{0.2, 0.7}};
    CHECK(is_bayes_for(one_state, RandomizedRule::pure({{0}}), Prior{{1.0}}));
    CHECK_FALSE(is_bayes_for(one_state, RandomizedRule::pure({{1}}), Prior{{1.0}}));
}
