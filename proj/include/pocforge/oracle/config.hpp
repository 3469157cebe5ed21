#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pocforge::oracle {

/// Success criteria carried inside an exploitation plan.
struct OracleConfig {
    std::vector<std::string> success_markers;
    std::vector<std::string> evidence_patterns;  // regex, matched over stdout+stderr
    std::vector<std::string> fatal_patterns;     // regex, matched over stderr
    bool expect_nonzero_exit = false;            // crash/timeout counts as success (DoS)
    bool differential_enabled = false;
};

/// Fatal patterns applied when a plan does not override them.
std::vector<std::string> default_fatal_patterns();

void to_json(nlohmann::json& j, const OracleConfig& c);
void from_json(const nlohmann::json& j, OracleConfig& c);

}  // namespace pocforge::oracle
