#include "tripsim/error.hpp"

namespace tripsim {

std::string_view to_string(ErrorCategory category) noexcept {
    switch (category) {
    case ErrorCategory::invalid_argument: return "invalid-argument";
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::degenerate_fit: return "degenerate-fit";
    case ErrorCategory::degenerate_input: return "degenerate-input";
    case ErrorCategory::undefined_correlation: return "undefined-correlation";
    case ErrorCategory::undefined_report: return "undefined-report";
    }
    return "unknown";
}

} // namespace tripsim
