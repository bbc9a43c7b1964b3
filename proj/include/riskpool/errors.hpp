#ifndef RISKPOOL_ERRORS_HPP
#define RISKPOOL_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <utility>

namespace riskpool {

/// Malformed or out-of-range input: bad files, dimension mismatches,
/// violated preconditions. The CLI maps these to exit code 1.
class validation_error : public std::runtime_error {
public:
    validation_error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Well-formed input for which no certificate exists or the answer is not
/// identifiable. The CLI maps these to exit code 2.
class infeasible_error : public std::runtime_error {
public:
    infeasible_error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace detail {

inline void require(bool ok, const char* code, const std::string& message) {
    if (!ok) throw validation_error(code, message);
}

} // namespace detail

} // namespace riskpool

#endif // RISKPOOL_ERRORS_HPP
