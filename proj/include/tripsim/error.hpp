#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tripsim {

/// Machine-readable failure classes surfaced by the library and the CLI.
enum class ErrorCategory {
    invalid_argument,
    io,
    format,
    degenerate_fit,
    degenerate_input,
    undefined_correlation,
    undefined_report,
};

std::string_view to_string(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

} // namespace tripsim
