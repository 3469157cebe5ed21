#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pocforge/error.hpp"

namespace pocforge::llm {

using json = nlohmann::json;

enum class Role { system, user, assistant };

const char* role_name(Role role);

struct ChatMessage {
    Role role = Role::user;
    std::string content;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    std::int64_t total_tokens() const { return prompt_tokens + completion_tokens; }
};

struct CompletionRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.1;
    std::int64_t max_tokens = 128000;
    std::optional<std::string> response_schema;

    CompletionRequest& add(Role role, std::string content) {
        messages.push_back({role, std::move(content)});
        return *this;
    }

    std::string joined_content() const;
};

struct CompletionResponse {
    std::string content;
    TokenUsage usage;
    std::string backend_id;
};

/// Abstract chat-completion backend. Implementations must be usable from
/// independent runs concurrently.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    virtual CompletionResponse complete(const CompletionRequest& request) = 0;
};

using BackendHandle = std::shared_ptr<Backend>;

/// Canned-reply backend for deterministic tests. Entries are selected in
/// order: the first unconsumed entry whose `match` substring (if any) occurs
/// in the request text wins; entries without `match` act as wildcards.
/// Sticky entries are never consumed.
class ScriptedBackend : public Backend {
public:
    struct Entry {
        std::optional<std::string> match;
        std::string reply;
        TokenUsage usage;
        bool sticky = false;
    };

    explicit ScriptedBackend(std::vector<Entry> entries);
    static std::shared_ptr<ScriptedBackend> from_file(const std::filesystem::path& path);

    std::string id() const override { return "scripted"; }
    CompletionResponse complete(const CompletionRequest& request) override;

    std::size_t remaining() const;

private:
    struct Slot {
        Entry entry;
        bool consumed = false;
    };
    std::vector<Slot> slots_;
    mutable std::mutex mutex_;
};

/// HTTP backend speaking the de-facto chat-completions JSON shape.
class HttpBackend : public Backend {
public:
    struct Config {
        std::string base_url;             // e.g. http://host:port
        std::string endpoint_path = "/v1/chat/completions";
        std::string model;
        std::string api_key_env = "LLM_API_KEY";
        std::string auth_header = "Authorization";
    };

    explicit HttpBackend(Config config);

    std::string id() const override { return "http:" + config_.base_url; }
    CompletionResponse complete(const CompletionRequest& request) override;

private:
    Config config_;
};

std::string request_digest(const CompletionRequest& request);

enum class RecordReplayMode { record, replay };

/// Wraps a live backend in record mode; serves persisted responses keyed by
/// request digest in replay mode.
class RecordReplayBackend : public Backend {
public:
    RecordReplayBackend(RecordReplayMode mode, std::filesystem::path store_path,
                        BackendHandle inner = nullptr);

    std::string id() const override;
    CompletionResponse complete(const CompletionRequest& request) override;

    std::size_t stored_count() const;

private:
    RecordReplayMode mode_;
    std::filesystem::path store_path_;
    BackendHandle inner_;
    mutable std::mutex mutex_;
};

/// Validates a parsed structured reply; returns an error message on failure.
using SchemaValidator = std::function<std::optional<std::string>(const json&)>;

class SchemaRegistry {
public:
    void register_schema(const std::string& id, SchemaValidator validator);
    const SchemaValidator* find(const std::string& id) const;

    /// Registry preloaded with the schemas the built-in agents use.
    static SchemaRegistry with_defaults();

private:
    std::map<std::string, SchemaValidator> validators_;
};

std::optional<std::string> validate_insight_schema(const json& value);
std::optional<std::string> validate_plan_schema(const json& value);
std::optional<std::string> validate_judgment_schema(const json& value);
std::optional<std::string> validate_reward_schema(const json& value);

/// Per-run gateway: routes every completion through one backend, repairs
/// malformed structured output, and keeps the run's token meter.
class Gateway {
public:
    static constexpr int kRepairRetries = 2;

    explicit Gateway(BackendHandle backend,
                     SchemaRegistry schemas = SchemaRegistry::with_defaults(),
                     std::int64_t run_token_budget = 0 /* 0 = unlimited */);

    CompletionResponse complete(const CompletionRequest& request);
    json complete_structured(const CompletionRequest& request);

    std::int64_t total_tokens() const;
    std::int64_t call_count() const { return call_count_; }
    const BackendHandle& backend() const { return backend_; }

private:
    BackendHandle backend_;
    SchemaRegistry schemas_;
    std::int64_t run_token_budget_;
    std::int64_t meter_ = 0;
    std::int64_t call_count_ = 0;
};

/// Strips a fenced code block wrapper from a reply, if present, and returns
/// the inner text. Used both for structured-output repair and PoC extraction.
std::optional<std::string> extract_fenced_block(const std::string& text,
                                                std::string* fence_tag = nullptr);

}  // namespace pocforge::llm
