#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pocforge/llm/gateway.hpp"
#include "pocforge/planner/types.hpp"

namespace pocforge::exec {

enum class Language { javascript, python, go, shell, unknown };

const char* language_name(Language lang);
Language language_from_name(const std::string& name);

/// File extension the artifact is materialized under.
const char* language_extension(Language lang);

struct PoCArtifact {
    std::string artifact_id;
    Language language = Language::unknown;
    std::string source;
    std::vector<std::string> entry_command;  // empty = per-language default
    std::vector<std::string> success_markers;
    int generation = 0;  // 0 = first synthesis, +1 per resynthesis
};

enum class NetworkPolicy { none, isolated };

struct SandboxSpec {
    planner::ExecutorBackend backend = planner::ExecutorBackend::local_process;
    std::filesystem::path working_dir;
    int timeout_secs = 60;
    int cpu_limit = 1;
    // Address-space cap for local runs. Node/V8 reserve multi-GB virtual
    // ranges at startup, so this must stay well above the actual heap need.
    std::int64_t memory_limit = 4096ll * 1024 * 1024;
    NetworkPolicy network = NetworkPolicy::none;
    std::optional<std::string> image;
    std::map<std::string, std::string> env;  // extra vars passed to the artifact
};

struct ExecutionResult {
    std::string stdout_text;
    std::string stderr_text;
    std::optional<int> exit_code;  // absent on timeout/kill
    std::int64_t duration_ms = 0;
    bool timed_out = false;
    planner::ExecutorBackend backend_used = planner::ExecutorBackend::local_process;
    std::string artifact_id;
};

/// Teardown accounting slack on top of timeout_secs.
constexpr std::int64_t kTimeoutGraceMs = 2000;

Language detect_language(const std::string& source);

PoCArtifact synthesize_poc(const planner::ExploitationPlan& plan,
                           const std::vector<planner::CodeEvidence>& evidence,
                           llm::Gateway& gateway);

ExecutionResult execute(const PoCArtifact& artifact, const SandboxSpec& sandbox);

SandboxSpec select_backend(const planner::ExploitationPlan& plan,
                           std::optional<planner::ExecutorBackend> override_backend,
                           const SandboxSpec& defaults = {});

/// Default argv for running a materialized artifact.
std::vector<std::string> default_entry_command(Language lang);

}  // namespace pocforge::exec
