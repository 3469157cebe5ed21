#include "pocforge/planner/types.hpp"

#include <algorithm>

namespace pocforge::planner {

using nlohmann::json;

const char* executor_backend_name(ExecutorBackend backend) {
    return backend == ExecutorBackend::container ? "container" : "local_process";
}

ExecutorBackend executor_backend_from_name(const std::string& name) {
    if (name == "container") return ExecutorBackend::container;
    if (name == "local_process") return ExecutorBackend::local_process;
    throw Error(ErrorCode::parse_error, "unknown executor backend: " + name);
}

void VulnerabilityReport::validate() const {
    if (description.empty())
        throw Error(ErrorCode::parse_error, "report description must be non-empty");
    if (!std::filesystem::is_directory(repo_path))
        throw Error(ErrorCode::missing_repo,
                    "repo_path is not a directory: " + repo_path.string());
}

std::vector<std::string> VulnerabilityInsight::keywords() const {
    std::vector<std::string> out = key_apis;
    out.insert(out.end(), vulnerable_params.begin(), vulnerable_params.end());
    out.erase(std::remove_if(out.begin(), out.end(),
                             [](const std::string& s) { return s.empty(); }),
              out.end());
    return out;
}

void ToolRegistry::register_tool(ToolDescriptor tool) {
    if (contains(tool.tool_id))
        throw Error(ErrorCode::duplicate_tool_id, "duplicate tool id: " + tool.tool_id);
    tools_.push_back(std::move(tool));
}

bool ToolRegistry::contains(const std::string& tool_id) const {
    return std::any_of(tools_.begin(), tools_.end(),
                       [&](const ToolDescriptor& t) { return t.tool_id == tool_id; });
}

const ToolDescriptor& ToolRegistry::get(const std::string& tool_id) const {
    for (const auto& t : tools_)
        if (t.tool_id == tool_id) return t;
    throw Error(ErrorCode::unknown_tool_in_plan, "tool not registered: " + tool_id);
}

std::vector<ToolDescriptor> ToolRegistry::list_tools() const { return tools_; }

ToolRegistry ToolRegistry::with_default_tools() {
    ToolRegistry reg;
    reg.register_tool({"node_function_call",
                       "Invoke a target package function directly inside a Node.js runtime",
                       {"package-function-call"},
                       ExecutorBackend::local_process});
    reg.register_tool({"script_runner",
                       "Run a standalone exploit script with a local interpreter",
                       {"package-function-call", "local-script"},
                       ExecutorBackend::local_process});
    reg.register_tool({"container_script_runner",
                       "Run an exploit script inside a disposable container",
                       {"containerized-service"},
                       ExecutorBackend::container});
    reg.register_tool({"http_request_sender",
                       "Send crafted HTTP requests to a running service endpoint",
                       {"containerized-service", "http-endpoint"},
                       ExecutorBackend::local_process});
    return reg;
}

// -------------------------------------------------------------------- serde

void to_json(json& j, const VulnerabilityInsight& v) {
    j = {{"vulnerability_type", v.vulnerability_type},
         {"attack_vector", v.attack_vector},
         {"vulnerable_params", v.vulnerable_params},
         {"key_apis", v.key_apis},
         {"entry_points", v.entry_points},
         {"summary", v.summary}};
}

void from_json(const json& j, VulnerabilityInsight& v) {
    v.vulnerability_type = j.at("vulnerability_type").get<std::string>();
    v.attack_vector = j.value("attack_vector", "");
    v.vulnerable_params = j.value("vulnerable_params", std::vector<std::string>{});
    v.key_apis = j.value("key_apis", std::vector<std::string>{});
    v.entry_points = j.value("entry_points", std::vector<std::string>{});
    v.summary = j.value("summary", "");
}

void to_json(json& j, const CodeEvidence& v) {
    j = {{"file", v.file}, {"line", v.line}, {"confidence", v.confidence}};
    if (v.endpoint) j["endpoint"] = *v.endpoint;
    if (v.parameter) j["parameter"] = *v.parameter;
    if (v.payload_hint) j["payload_hint"] = *v.payload_hint;
}

void from_json(const json& j, CodeEvidence& v) {
    v.file = j.at("file").get<std::string>();
    v.line = j.value("line", 0);
    v.confidence = j.value("confidence", 0.0);
    if (j.contains("endpoint")) v.endpoint = j["endpoint"].get<std::string>();
    if (j.contains("parameter")) v.parameter = j["parameter"].get<std::string>();
    if (j.contains("payload_hint")) v.payload_hint = j["payload_hint"].get<std::string>();
}

void to_json(json& j, const ExploitationPlan& v) {
    json steps = json::array();
    for (const auto& s : v.steps)
        steps.push_back({{"description", s.description}, {"tool_id", s.tool_id}});
    j = {{"plan_id", v.plan_id},
         {"insight", v.insight},
         {"evidence", v.evidence},
         {"steps", steps},
         {"payloads", v.payloads},
         {"oracle_config", v.oracle_config},
         {"chosen_executor", executor_backend_name(v.chosen_executor)}};
}

void from_json(const json& j, ExploitationPlan& v) {
    v.plan_id = j.at("plan_id").get<std::string>();
    v.insight = j.at("insight").get<VulnerabilityInsight>();
    v.evidence = j.value("evidence", std::vector<CodeEvidence>{});
    v.steps.clear();
    for (const auto& s : j.at("steps"))
        v.steps.push_back({s.at("description").get<std::string>(),
                           s.at("tool_id").get<std::string>()});
    v.payloads = j.value("payloads", std::vector<std::string>{});
    if (j.contains("oracle_config")) v.oracle_config = j["oracle_config"];
    v.chosen_executor = executor_backend_from_name(j.value("chosen_executor", "local_process"));
}

void to_json(json& j, const VulnerabilityReport& v) {
    j = {{"cve_id", v.cve_id},
         {"description", v.description},
         {"package", v.package},
         {"version", v.version},
         {"metadata", v.metadata},
         {"repo_path", v.repo_path.string()}};
    if (v.patched_path) j["patched_path"] = v.patched_path->string();
}

void from_json(const json& j, VulnerabilityReport& v) {
    v.cve_id = j.value("cve_id", "");
    v.description = j.at("description").get<std::string>();
    v.package = j.value("package", "");
    v.version = j.value("version", "");
    v.metadata = j.value("metadata", std::map<std::string, std::string>{});
    v.repo_path = j.at("repo_path").get<std::string>();
    if (j.contains("patched_path")) v.patched_path = j["patched_path"].get<std::string>();
}

}  // namespace pocforge::planner
