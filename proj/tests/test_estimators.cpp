#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "riskpool/estimators.hpp"
#include "riskpool/rng.hpp"

using namespace riskpool;

TEST_CASE("james_stein applies the shrinkage formula") {
    const auto a = james_stein(std::vector<double>{1.0, 0.0, 0.0});
    CHECK(a == std::vector<double>{0.0, 0.0, 0.0});

    const auto b = james_stein(std::vector<double>{2.0, 0.0, 0.0, 0.0});
    CHECK(b == std::vector<double>{1.0, 0.0, 0.0, 0.0});

    CHECK_THROWS_AS(james_stein(std::vector<double>{1.0, 2.0}), validation_error);
    CHECK_THROWS_AS(james_stein(std::vector<double>{0.0, 0.0, 0.0}), validation_error);
}

TEST_CASE("james_stein scaling identity") {
    const std::vector<double> x = {0.3, -1.2, 2.0, 0.7};
    for (const double c : {0.1, 2.0, 25.0}) {
        std::vector<double> scaled = x;
        for (auto& v : scaled) v *= c;
        const auto lhs = james_stein(scaled);
        double norm2 = 0.0;
        for (double v : x) norm2 += v * v;
        const double factor = 1.0 - (4.0 - 2.0) / (c * c * norm2);
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(lhs[i] == Catch::Approx(c * factor * x[i]).margin(1e-12));
    }
}

TEST_CASE("single-sample risk equals the squared error of that draw") {
    McConfig config{5, {0.5, -0.25, 1.0, 0.0, 2.0}, 1, 987654321};
    // Reconstruct the observation from the documented counter discipline.
    std::vector<double> x(5);
    for (std::size_t j = 0; j < 5; ++j)
        x[j] = config.theta[j] + rng::normal_at(config.seed, j);

    const auto mean = mc_risk(Estimator::mean, config);
    double expected = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
        const double e = x[j] - config.theta[j];
        expected += e * e;
    }
    CHECK(mean.risk == expected);
    CHECK(mean.std_error == 0.0);

    const auto js_est = james_stein(x);
    const auto js = mc_risk(Estimator::james_stein, config);
    double expected_js = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
        const double e = js_est[j] - config.theta[j];
        expected_js += e * e;
    }
    CHECK(js.risk == Catch::Approx(expected_js).margin(1e-15));
}

TEST_CASE("risk estimates are bit-identical across re-runs and thread counts") {
    McConfig config{4, {0.0, 1.0, -1.0, 0.5}, 200000, 2024};
    const auto a = mc_risk(Estimator::james_stein, config, 1);
    const auto b = mc_risk(Estimator::james_stein, config, 1);
    const auto c = mc_risk(Estimator::james_stein, config, 4);
    CHECK(a.risk == b.risk);
    CHECK(a.std_error == b.std_error);
    CHECK(a.risk == c.risk);
    CHECK(a.std_error == c.std_error);
}

TEST_CASE("mean-estimator risk matches the chi-square expectation") {
    // Identity estimator: risk is exactly d.
    McConfig config{5, {1.0, 2.0, 3.0, 4.0, 5.0}, 200000, 7};
    const auto mean = mc_risk(Estimator::mean, config, 2);
    CHECK(std::abs(mean.risk - 5.0) <= 4.0 * mean.std_error);
}

TEST_CASE("james-stein risk at the origin matches the analytic value") {
    // d - (d-2)^2 E[1/chi2_d] = d - (d-2) = 2 for d = 5.
    McConfig config{5, {0.0, 0.0, 0.0, 0.0, 0.0}, 200000, 7};
    const auto js = mc_risk(Estimator::james_stein, config, 2);
    CHECK(std::abs(js.risk - 2.0) <= 4.0 * js.std_error);
    CHECK_THROWS_AS(mc_risk(Estimator::james_stein, McConfig{2, {0.0, 0.0}, 10, 1}),
                    validation_error);
}

TEST_CASE("dominance report flags the origin and not the far field") {
    const auto rows = dominance_report(
        5, {{0.0, 0.0, 0.0, 0.0, 0.0}, {30.0, 30.0, 30.0, 20.0, 10.0}}, 200000, 99, 2);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].dominant);
    CHECK(std::abs(rows[0].js_risk.risk - 2.0) <= 4.0 * rows[0].js_risk.std_error);
    CHECK(std::abs(rows[0].mean_risk.risk - 5.0) <= 4.0 * rows[0].mean_risk.std_error);
    // Far from the origin the shrinkage vanishes; risks agree within noise.
    CHECK_FALSE(rows[1].dominant);
    CHECK(std::abs(rows[1].js_risk.risk - rows[1].mean_risk.risk) <=
          4.0 * (rows[1].js_risk.std_error + rows[1].mean_risk.std_error));

    CHECK_THROWS_AS(dominance_report(1, {{0.0}}, 10, 1), validation_error);
}

TEST_CASE("dominance CSV is deterministic with the documented columns") {
    const auto rows = dominance_report(3, {{0.0, 0.0, 0.0}}, 5000, 31);
    const auto csv_a = dominance_report_csv(rows, 5000, 31);
    const auto csv_b = dominance_report_csv(dominance_report(3, {{0.0, 0.0, 0.0}}, 5000, 31),
                                            5000, 31);
    CHECK(csv_a == csv_b);
    CHECK(csv_a.rfind("theta_label,estimator,risk,std_error,samples,seed,dominant_flag\n",
                      0) == 0);
    CHECK(csv_a.find(",mean,") != std::string::npos);
    CHECK(csv_a.find(",james_stein,") != std::string::npos);
}
