#pragma once

#include <cstdint>
#include <filesystem>
#include <list>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pocforge/exec/executor.hpp"
#include "pocforge/llm/gateway.hpp"
#include "pocforge/oracle/oracle.hpp"

namespace pocforge::refiner {

enum class Route { success, refine, resynthesize, replan };
enum class FailureCategory { wrong_tool, syntax_error, env_missing, module_error, logic_error, unknown };

const char* route_name(Route route);
Route route_from_name(const std::string& name);
const char* failure_category_name(FailureCategory category);
FailureCategory failure_category_from_name(const std::string& name);

/// One iteration's dual-dimension feedback; the unit of experience.
struct RewardRecord {
    std::string record_id;
    int iteration = 0;
    double tactical_score = 0.0;   // in [-1, 1]
    double strategic_score = 0.0;  // in [0, 10]
    std::string state_tag;         // partial_exec, module_error, no_progress, exploited, ...
    std::string feedback;
    std::vector<std::string> improvement_hints;
    std::optional<FailureCategory> error_type;
    std::vector<std::string> tools_used;
    Route suggested_route = Route::replan;
    bool oracle_confirmed = false;

    /// Compact one-line form used in prompts; full content stays behind the id.
    std::string summary() const;
};

void to_json(nlohmann::json& j, const RewardRecord& r);
void from_json(const nlohmann::json& j, RewardRecord& r);

struct RewardConfig {
    int k_recent = 3;
    int k_error = 2;
    int escalation_window = 2;  // W consecutive refines without progress
    std::size_t cache_capacity = 64;
};

/// Append-only JSONL store with in-memory summaries, on-demand content loads
/// and an LRU cache.
class RewardStore {
public:
    explicit RewardStore(std::filesystem::path path, std::size_t cache_capacity = 64);

    std::string store_reward(const RewardRecord& record);
    std::vector<RewardRecord> retrieve_recent(int k) const;
    std::vector<RewardRecord> retrieve_by_error(FailureCategory error_type) const;
    RewardRecord load_content(const std::string& record_id) const;

    std::size_t size() const { return index_.size(); }
    std::int64_t cache_hits() const { return cache_hits_; }
    std::int64_t cache_misses() const { return cache_misses_; }
    const std::filesystem::path& path() const { return path_; }

private:
    struct IndexEntry {
        std::string record_id;
        int iteration = 0;
        double strategic_score = 0.0;
        std::optional<FailureCategory> error_type;
        std::streamoff offset = 0;
    };

    RewardRecord read_at(std::streamoff offset) const;
    RewardRecord cached_load(const IndexEntry& entry) const;

    std::filesystem::path path_;
    std::vector<IndexEntry> index_;
    std::size_t cache_capacity_;
    mutable std::list<std::string> lru_;  // front = most recent
    mutable std::map<std::string, std::pair<RewardRecord, std::list<std::string>::iterator>> cache_;
    mutable std::int64_t cache_hits_ = 0;
    mutable std::int64_t cache_misses_ = 0;
};

/// Scores an execution via the structured judge, applying deterministic
/// clamps, and persists the record. Falls back to rule-based scores when the
/// judge is unavailable.
RewardRecord shape_reward(const oracle::OracleVerdict& verdict,
                          const exec::ExecutionResult& result,
                          const planner::VulnerabilityInsight& context, int iteration,
                          const std::string& run_id, llm::Gateway& gateway,
                          RewardStore& store);

/// Judge-free scoring used when the gateway fails mid-run.
RewardRecord fallback_reward(const oracle::OracleVerdict& verdict,
                             const exec::ExecutionResult& result, int iteration,
                             const std::string& run_id);

struct BudgetState {
    int tactical_iterations_used = 0;
    int max_tactical_iterations = 5;

    bool tactical_exhausted() const {
        return tactical_iterations_used + 1 >= max_tactical_iterations;
    }
};

/// Routing table plus escalation overrides (stuck-refine window, tactical
/// budget exhaustion, confirmed-verdict dominance).
Route route(const RewardRecord& record, const std::vector<RewardRecord>& history,
            const BudgetState& budget, int escalation_window = 2);

/// Targeted modification preserving the attack strategy. May alter the entry
/// command instead of the source for env_missing failures.
exec::PoCArtifact refine(const exec::PoCArtifact& artifact, const RewardRecord& record,
                         const planner::ExploitationPlan& plan, llm::Gateway& gateway);

}  // namespace pocforge::refiner
