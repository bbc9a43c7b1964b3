#ifndef RISKPOOL_ESTIMATORS_HPP
#define RISKPOOL_ESTIMATORS_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "riskpool/errors.hpp"
#include "riskpool/rng.hpp"

namespace riskpool {

struct McConfig {
    std::size_t dimension = 1;
    std::vector<double> theta;
    std::size_t samples = 1;
    std::uint64_t seed = 0;

    void validate() const {
        detail::require(dimension >= 1, "range", "dimension must be at least 1");
        detail::require(theta.size() == dimension, "dim",
                        "theta length must match the dimension");
        for (double v : theta)
            detail::require(std::isfinite(v), "range", "theta must be finite");
        detail::require(samples >= 1, "range", "need at least one sample");
    }
};

enum class Estimator { mean, james_stein };

/// Shrinkage estimate (1 - (d-2)/|x|^2) x from a single observation.
/// The positive-part variant (clamping the shrink factor at zero) dominates
/// this estimator in turn; it is out of scope here.
inline std::vector<double> james_stein(std::span<const double> x) {
    detail::require(x.size() >= 3, "domain",
                    "James-Stein needs dimension >= 3; below that it does not "
                    "dominate the sample mean");
    double norm2 = 0.0;
    for (double v : x) norm2 += v * v;
    detail::require(norm2 > 0.0, "singular",
                    "James-Stein is undefined at the zero vector");
    const double shrink = 1.0 - (static_cast<double>(x.size()) - 2.0) / norm2;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = shrink * x[i];
    return out;
}

struct McRisk {
    double risk = 0.0;
    double std_error = 0.0;
};

namespace detail {

inline constexpr std::size_t mc_chunk = std::size_t{1} << 16;

/// Squared error of the estimator on observation `index`. Observation i,
/// coordinate j draws normal_at(seed, i*d + j); this fixed discipline makes
/// the draws identical no matter how the loop is chunked, and shares the
/// observations between estimators run at the same seed.
inline double mc_squared_error(Estimator est, const McConfig& config, std::size_t index,
                               std::vector<double>& x) {
    const std::size_t d = config.dimension;
    for (std::size_t j = 0; j < d; ++j)
        x[j] = config.theta[j] +
               rng::normal_at(config.seed, static_cast<std::uint64_t>(index) * d + j);
    double err = 0.0;
    if (est == Estimator::mean) {
        for (std::size_t j = 0; j < d; ++j) {
            const double e = x[j] - config.theta[j];
            err += e * e;
        }
    } else {
        double norm2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) norm2 += x[j] * x[j];
        if (!(norm2 > 0.0))
            throw validation_error("singular", "James-Stein is undefined at the zero vector");
        const double shrink = 1.0 - (static_cast<double>(d) - 2.0) / norm2;
        for (std::size_t j = 0; j < d; ++j) {
            const double e = shrink * x[j] - config.theta[j];
            err += e * e;
        }
    }
    return err;
}

} // namespace detail

/// Empirical mean squared risk of the estimator under N_d(theta, I), with
/// its standard error. Chunks of fixed size may be processed by several
/// threads; partial sums are reduced in chunk order, so the result is
/// bit-identical for any thread count and re-run.
inline McRisk mc_risk(Estimator est, const McConfig& config, unsigned threads = 1) {
    config.validate();
    if (est == Estimator::james_stein)
        detail::require(config.dimension >= 3, "domain",
                        "James-Stein needs dimension >= 3; below that it does not "
                        "dominate the sample mean");

    const std::size_t n = config.samples;
    const std::size_t chunks = (n + detail::mc_chunk - 1) / detail::mc_chunk;
    std::vector<double> chunk_sum(chunks, 0.0);
    std::vector<double> chunk_sumsq(chunks, 0.0);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        std::vector<double> x(config.dimension);
        try {
            for (std::size_t c = next.fetch_add(1); c < chunks; c = next.fetch_add(1)) {
                const std::size_t begin = c * detail::mc_chunk;
                const std::size_t end = std::min(n, begin + detail::mc_chunk);
                double s = 0.0;
                double s2 = 0.0;
                for (std::size_t i = begin; i < end; ++i) {
                    const double e = detail::mc_squared_error(est, config, i, x);
                    s += e;
                    s2 += e * e;
                }
                chunk_sum[c] = s;
                chunk_sumsq[c] = s2;
            }
        } catch (...) {
            const std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
        }
    };

    unsigned workers = std::max(1u, threads);
    workers = static_cast<unsigned>(
        std::min<std::size_t>(workers, chunks));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t c = 0; c < chunks; ++c) {
        sum += chunk_sum[c];
        sumsq += chunk_sumsq[c];
    }
    McRisk out;
    const double count = static_cast<double>(n);
    out.risk = sum / count;
    if (n > 1) {
        const double variance = std::max(0.0, (sumsq - count * out.risk * out.risk) /
                                                  (count - 1.0));
        out.std_error = std::sqrt(variance / count);
    }
    return out;
}

struct DominanceRow {
    std::vector<double> theta;
    McRisk mean_risk;
    McRisk js_risk;
    bool dominant = false; // js_risk + 4 * js std errors below the mean risk
};

/// Mean vs James-Stein risks over a grid of parameter points, sharing the
/// same seeded draws so the comparison is paired.
inline std::vector<DominanceRow> dominance_report(std::size_t dimension,
                                                  const std::vector<std::vector<double>>& grid,
                                                  std::size_t samples, std::uint64_t seed,
                                                  unsigned threads = 1) {
    detail::require(dimension >= 3, "domain",
                    "James-Stein needs dimension >= 3; below that it does not "
                    "dominate the sample mean");
    detail::require(!grid.empty(), "schema", "theta grid must not be empty");
    std::vector<DominanceRow> rows;
    for (const auto& theta : grid) {
        McConfig config{dimension, theta, samples, seed};
        DominanceRow row;
        row.theta = theta;
        row.mean_risk = mc_risk(Estimator::mean, config, threads);
        row.js_risk = mc_risk(Estimator::james_stein, config, threads);
        row.dominant = row.js_risk.risk + 4.0 * row.js_risk.std_error < row.mean_risk.risk;
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace detail {

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// CSV rendering, one line per (grid point, estimator).
inline std::string dominance_report_csv(const std::vector<DominanceRow>& rows,
                                        std::size_t samples, std::uint64_t seed) {
    std::string out = "theta_label,estimator,risk,std_error,samples,seed,dominant_flag\n";
    for (const auto& row : rows) {
        std::string label;
        for (std::size_t i = 0; i < row.theta.size(); ++i) {
            if (i) label += ';';
            label += detail::csv_number(row.theta[i]);
        }
        const std::string suffix = "," + std::to_string(samples) + "," +
                                   std::to_string(seed) + "," +
                                   (row.dominant ? "1" : "0") + "\n";
        out += label + ",mean," + detail::csv_number(row.mean_risk.risk) + "," +
               detail::csv_number(row.mean_risk.std_error) + suffix;
        out += label + ",james_stein," + detail::csv_number(row.js_risk.risk) + "," +
               detail::csv_number(row.js_risk.std_error) + suffix;
    }
    return out;
}

} // namespace riskpool

#endif // RISKPOOL_ESTIMATORS_HPP
