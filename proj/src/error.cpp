#include "pocforge/error.hpp"

namespace pocforge {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::backend_unreachable: return "backend_unreachable";
        case ErrorCode::script_exhausted: return "script_exhausted";
        case ErrorCode::token_budget_exceeded: return "token_budget_exceeded";
        case ErrorCode::schema_violation_after_retries: return "schema_violation_after_retries";
        case ErrorCode::recording_missing: return "recording_missing";
        case ErrorCode::store_io_error: return "store_io_error";
        case ErrorCode::scanner_failure: return "scanner_failure";
        case ErrorCode::duplicate_tool_id: return "duplicate_tool_id";
        case ErrorCode::unknown_tool_in_plan: return "unknown_tool_in_plan";
        case ErrorCode::no_code_block: return "no_code_block";
        case ErrorCode::backend_unavailable: return "backend_unavailable";
        case ErrorCode::sandbox_setup_failure: return "sandbox_setup_failure";
        case ErrorCode::unknown_record_id: return "unknown_record_id";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::missing_repo: return "missing_repo";
        case ErrorCode::config_error: return "config_error";
    }
    return "unknown";
}

}  // namespace pocforge
