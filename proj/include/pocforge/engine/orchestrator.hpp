#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pocforge/engine/config.hpp"
#include "pocforge/exec/executor.hpp"
#include "pocforge/oracle/oracle.hpp"
#include "pocforge/planner/planner.hpp"
#include "pocforge/refiner/refiner.hpp"

namespace pocforge::engine {

enum class Phase { planning, synthesizing, executing, verifying, shaping, routing, done };

struct RunState {
    int strategic_cycle = 0;
    int tactical_iteration = 0;
    int consecutive_replans = 0;
    std::optional<planner::ExecutorBackend> executor_override;
    std::optional<planner::ExploitationPlan> current_plan;
    std::optional<exec::PoCArtifact> current_artifact;
    Phase phase = Phase::planning;
    bool fallback_used = false;
};

/// One row of the replayable trajectory.
struct TraceEntry {
    int iteration = 0;
    std::string state_tag;
    double tactical_score = 0.0;
    double strategic_score = 0.0;
    std::string feedback;
    std::vector<std::string> improvement_hints;
    refiner::Route route = refiner::Route::replan;
    bool fallback_triggered = false;
};

enum class RunStatus { exploited, budget_exhausted, timeout, fatal_error };

const char* run_status_name(RunStatus status);

struct RunOutcome {
    RunStatus status = RunStatus::fatal_error;
    std::optional<exec::PoCArtifact> final_artifact;
    std::optional<oracle::OracleVerdict> final_verdict;
    std::vector<TraceEntry> trace;
    std::int64_t total_tokens = 0;
    std::int64_t duration_ms = 0;
    int iterations = 0;
    std::string error_detail;  // populated on fatal_error
};

/// Applies the executor-backend fallback once per run and resets the replan
/// counter.
RunState apply_fallback(RunState state);

void to_json(nlohmann::json& j, const TraceEntry& e);
void from_json(const nlohmann::json& j, TraceEntry& e);

/// JSONL: one TraceEntry per line plus a summary footer.
void write_trace(const RunOutcome& outcome, const std::filesystem::path& path);

struct TraceFile {
    std::vector<TraceEntry> entries;
    nlohmann::json footer;
};

TraceFile read_trace(const std::filesystem::path& path);

class Engine {
public:
    Engine(EngineConfig config, planner::ToolRegistry registry =
                                    planner::ToolRegistry::with_default_tools());

    RunOutcome run(const planner::VulnerabilityReport& report);

    /// Oracle-config override, used when a benchmark entry ships its own.
    RunOutcome run(const planner::VulnerabilityReport& report,
                   const std::optional<oracle::OracleConfig>& oracle_override);

    const EngineConfig& config() const { return config_; }
    const planner::ToolRegistry& registry() const { return registry_; }

private:
    EngineConfig config_;
    planner::ToolRegistry registry_;
};

}  // namespace pocforge::engine
