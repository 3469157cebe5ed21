#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "pocforge/exec/executor.hpp"
#include "pocforge/llm/gateway.hpp"
#include "pocforge/planner/types.hpp"
#include "pocforge/refiner/refiner.hpp"

namespace pocforge::engine {

struct RunBudget {
    int max_strategic_cycles = 3;
    int max_tactical_iterations_per_cycle = 5;
    int wall_clock_secs = 600;
    /// When false, the tactical counter is global across cycles instead of
    /// resetting per strategic cycle.
    bool tactical_reset_per_cycle = true;
};

struct BackendConfig {
    enum class Kind { live, scripted, replay };
    Kind kind = Kind::scripted;
    std::string script_path;           // scripted
    std::string replay_store;          // replay
    std::string base_url;              // live
    std::string endpoint_path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "LLM_API_KEY";
};

struct EngineConfig {
    BackendConfig backend;
    double temperature = 0.1;
    std::int64_t max_tokens_per_call = 128000;
    std::int64_t run_token_budget = 0;  // 0 = unlimited
    RunBudget budget;
    refiner::RewardConfig reward;
    exec::SandboxSpec sandbox_defaults;
    int fallback_threshold = 2;  // F consecutive zero-progress replans
    bool experience_enabled = true;
    bool differential_enabled = false;
    std::filesystem::path out_dir;

    /// An already-constructed backend takes precedence over `backend` config;
    /// used by tests and the bench harness.
    llm::BackendHandle backend_handle;

    llm::BackendHandle make_backend() const;

    static EngineConfig from_file(const std::filesystem::path& path);
    static EngineConfig from_json(const nlohmann::json& doc);
};

}  // namespace pocforge::engine
