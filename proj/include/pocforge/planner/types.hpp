#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pocforge/error.hpp"
#include "pocforge/oracle/config.hpp"

namespace pocforge::planner {

enum class ExecutorBackend { local_process, container };

const char* executor_backend_name(ExecutorBackend backend);
ExecutorBackend executor_backend_from_name(const std::string& name);

/// The reproduction input: description, package, version, metadata, plus the
/// checked-out vulnerable source tree.
struct VulnerabilityReport {
    std::string cve_id;
    std::string description;
    std::string package;
    std::string version;
    std::map<std::string, std::string> metadata;
    std::filesystem::path repo_path;
    std::optional<std::filesystem::path> patched_path;

    void validate() const;
};

struct VulnerabilityInsight {
    std::string vulnerability_type;
    std::string attack_vector;
    std::vector<std::string> vulnerable_params;
    std::vector<std::string> key_apis;
    std::vector<std::string> entry_points;
    std::string summary;

    /// Keywords the code analysis filters on: key_apis plus vulnerable_params.
    std::vector<std::string> keywords() const;
};

struct CodeEvidence {
    std::string file;  // relative to repo_path
    int line = 0;
    std::optional<std::string> endpoint;
    std::optional<std::string> parameter;
    std::optional<std::string> payload_hint;
    double confidence = 0.0;
};

struct ToolDescriptor {
    std::string tool_id;
    std::string capability_description;
    std::vector<std::string> target_kinds;
    ExecutorBackend executor_backend = ExecutorBackend::local_process;
};

class ToolRegistry {
public:
    void register_tool(ToolDescriptor tool);
    bool contains(const std::string& tool_id) const;
    const ToolDescriptor& get(const std::string& tool_id) const;
    std::vector<ToolDescriptor> list_tools() const;
    bool empty() const { return tools_.empty(); }

    /// node function-call runner, script-in-container runner, HTTP sender.
    static ToolRegistry with_default_tools();

private:
    std::vector<ToolDescriptor> tools_;
};

struct PlanStep {
    std::string description;
    std::string tool_id;
};

struct ExploitationPlan {
    std::string plan_id;
    VulnerabilityInsight insight;
    std::vector<CodeEvidence> evidence;
    std::vector<PlanStep> steps;
    std::vector<std::string> payloads;
    oracle::OracleConfig oracle_config;
    ExecutorBackend chosen_executor = ExecutorBackend::local_process;
};

void to_json(nlohmann::json& j, const VulnerabilityInsight& v);
void from_json(const nlohmann::json& j, VulnerabilityInsight& v);
void to_json(nlohmann::json& j, const CodeEvidence& v);
void from_json(const nlohmann::json& j, CodeEvidence& v);
void to_json(nlohmann::json& j, const ExploitationPlan& v);
void from_json(const nlohmann::json& j, ExploitationPlan& v);
void to_json(nlohmann::json& j, const VulnerabilityReport& v);
void from_json(const nlohmann::json& j, VulnerabilityReport& v);

}  // namespace pocforge::planner
