#pragma once

#include <stdexcept>
#include <string>

namespace pocforge {

enum class ErrorCode {
    backend_unreachable,
    script_exhausted,
    token_budget_exceeded,
    schema_violation_after_retries,
    recording_missing,
    store_io_error,
    scanner_failure,
    duplicate_tool_id,
    unknown_tool_in_plan,
    no_code_block,
    backend_unavailable,
    sandbox_setup_failure,
    unknown_record_id,
    parse_error,
    missing_repo,
    config_error,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

const char* error_code_name(ErrorCode code);

}  // namespace pocforge
