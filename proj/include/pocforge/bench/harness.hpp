#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pocforge/engine/orchestrator.hpp"

namespace pocforge::bench {

struct BenchmarkEntry {
    std::string cve_id;
    std::string description;
    std::string package;
    std::string version;
    std::filesystem::path repo_path;
    std::optional<std::filesystem::path> patched_path;
    std::optional<oracle::OracleConfig> oracle_config;
    std::optional<std::string> ground_truth_payload;

    planner::VulnerabilityReport to_report() const;
};

struct EntryResult {
    std::string cve_id;
    engine::RunStatus status = engine::RunStatus::fatal_error;
    int iterations = 0;
    std::int64_t tokens = 0;
    std::int64_t duration_ms = 0;
};

struct BenchmarkReport {
    int total = 0;
    int successes = 0;
    double rsr = 0.0;  // percentage
    std::int64_t total_tokens = 0;
    double avg_iterations = 0.0;
    double avg_time_ms = 0.0;
    std::vector<EntryResult> per_entry;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// Paired full-vs-ablated report in the experience-indexing ablation layout.
struct AblationReport {
    BenchmarkReport with_indexing;
    BenchmarkReport without_indexing;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

std::vector<BenchmarkEntry> load_dataset(const std::filesystem::path& path);

BenchmarkReport run_benchmark(const std::vector<BenchmarkEntry>& entries,
                              const engine::EngineConfig& config, int parallelism = 1);

AblationReport compare_with_memory_disabled(const std::vector<BenchmarkEntry>& entries,
                                            const engine::EngineConfig& config);

}  // namespace pocforge::bench
