#include "pocforge/engine/config.hpp"

#include <fstream>

namespace pocforge::engine {

using nlohmann::json;

llm::BackendHandle EngineConfig::make_backend() const {
    if (backend_handle) return backend_handle;
    switch (backend.kind) {
        case BackendConfig::Kind::scripted:
            if (backend.script_path.empty())
                throw Error(ErrorCode::config_error, "scripted backend needs a script path");
            return llm::ScriptedBackend::from_file(backend.script_path);
        case BackendConfig::Kind::replay:
            return std::make_shared<llm::RecordReplayBackend>(
                llm::RecordReplayMode::replay, backend.replay_store);
        case BackendConfig::Kind::live: {
            llm::HttpBackend::Config http;
            http.base_url = backend.base_url;
            http.endpoint_path = backend.endpoint_path;
            http.model = backend.model;
            http.api_key_env = backend.api_key_env;
            return std::make_shared<llm::HttpBackend>(http);
        }
    }
    throw Error(ErrorCode::config_error, "unknown backend kind");
}

EngineConfig EngineConfig::from_json(const json& doc) {
    EngineConfig cfg;
    if (doc.contains("backend")) {
        const auto& b = doc["backend"];
        const std::string kind = b.value("kind", "scripted");
        if (kind == "live") cfg.backend.kind = BackendConfig::Kind::live;
        else if (kind == "replay") cfg.backend.kind = BackendConfig::Kind::replay;
        else if (kind == "scripted") cfg.backend.kind = BackendConfig::Kind::scripted;
        else throw Error(ErrorCode::config_error, "unknown backend kind: " + kind);
        cfg.backend.script_path = b.value("script_path", "");
        cfg.backend.replay_store = b.value("replay_store", "");
        cfg.backend.base_url = b.value("base_url", "");
        cfg.backend.endpoint_path = b.value("endpoint_path", "/v1/chat/completions");
        cfg.backend.model = b.value("model", "");
        cfg.backend.api_key_env = b.value("api_key_env", "LLM_API_KEY");
    }
    cfg.temperature = doc.value("temperature", 0.1);
    cfg.max_tokens_per_call = doc.value("max_tokens_per_call", std::int64_t{128000});
    cfg.run_token_budget = doc.value("run_token_budget", std::int64_t{0});
    if (doc.contains("budget")) {
        const auto& b = doc["budget"];
        cfg.budget.max_strategic_cycles = b.value("max_strategic_cycles", 3);
        cfg.budget.max_tactical_iterations_per_cycle =
            b.value("max_tactical_iterations_per_cycle", 5);
        cfg.budget.wall_clock_secs = b.value("wall_clock_secs", 600);
        cfg.budget.tactical_reset_per_cycle = b.value("tactical_reset_per_cycle", true);
        if (cfg.budget.max_strategic_cycles <= 0 ||
            cfg.budget.max_tactical_iterations_per_cycle <= 0 ||
            cfg.budget.wall_clock_secs <= 0)
            throw Error(ErrorCode::config_error, "budget values must be positive");
    }
    if (doc.contains("reward")) {
        const auto& r = doc["reward"];
        cfg.reward.k_recent = r.value("k_recent", 3);
        cfg.reward.k_error = r.value("k_error", 2);
        cfg.reward.escalation_window = r.value("escalation_window", 2);
        cfg.reward.cache_capacity = r.value("cache_capacity", std::size_t{64});
    }
    if (doc.contains("sandbox")) {
        const auto& s = doc["sandbox"];
        cfg.sandbox_defaults.timeout_secs = s.value("timeout_secs", 60);
        cfg.sandbox_defaults.cpu_limit = s.value("cpu_limit", 1);
        cfg.sandbox_defaults.memory_limit =
            s.value("memory_limit", std::int64_t{4096} * 1024 * 1024);
        cfg.sandbox_defaults.network = s.value("network", std::string("none")) == "isolated"
                                           ? exec::NetworkPolicy::isolated
                                           : exec::NetworkPolicy::none;
        if (s.contains("image")) cfg.sandbox_defaults.image = s["image"].get<std::string>();
    }
    cfg.fallback_threshold = doc.value("fallback_threshold", 2);
    cfg.experience_enabled = doc.value("experience_enabled", true);
    cfg.differential_enabled = doc.value("differential_enabled", false);
    if (doc.contains("out_dir")) cfg.out_dir = doc["out_dir"].get<std::string>();
    return cfg;
}

EngineConfig EngineConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config_error, "cannot open config: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::config_error, "malformed config JSON: " + path.string());
    return from_json(doc);
}

}  // namespace pocforge::engine
