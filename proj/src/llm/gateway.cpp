#include "pocforge/llm/gateway.hpp"

#include <fstream>
#include <sstream>

namespace pocforge::llm {

const char* role_name(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

std::string CompletionRequest::joined_content() const {
    std::string out;
    for (const auto& m : messages) {
        out += m.content;
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------- scripted

ScriptedBackend::ScriptedBackend(std::vector<Entry> entries) {
    slots_.reserve(entries.size());
    for (auto& e : entries) slots_.push_back({std::move(e), false});
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::store_io_error, "cannot open script: " + path.string());
    json doc = json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::parse_error, "malformed script file: " + path.string());
    const json* arr = &doc;
    if (doc.is_object()) {
        if (!doc.contains("entries"))
            throw Error(ErrorCode::parse_error, "script object missing 'entries'");
        arr = &doc["entries"];
    }
    std::vector<Entry> entries;
    for (const auto& item : *arr) {
        Entry e;
        if (item.contains("match")) e.match = item["match"].get<std::string>();
        e.reply = item.at("reply").get<std::string>();
        if (item.contains("usage")) {
            e.usage.prompt_tokens = item["usage"].value("prompt", 0);
            e.usage.completion_tokens = item["usage"].value("completion", 0);
        }
        e.sticky = item.value("sticky", false);
        entries.push_back(std::move(e));
    }
    return std::make_shared<ScriptedBackend>(std::move(entries));
}

CompletionResponse ScriptedBackend::complete(const CompletionRequest& request) {
    std::lock_guard<std::mutex> lock(mutex_);
    const std::string text = request.joined_content();
    for (auto& slot : slots_) {
        if (slot.consumed) continue;
        if (slot.entry.match && text.find(*slot.entry.match) == std::string::npos) continue;
        if (!slot.entry.sticky) slot.consumed = true;
        return {slot.entry.reply, slot.entry.usage, id()};
    }
    throw Error(ErrorCode::script_exhausted, "scripted backend has no reply for request");
}

std::size_t ScriptedBackend::remaining() const {
    std::lock_guard<std::mutex> lock(mutex_);
    std::size_t n = 0;
    for (const auto& slot : slots_)
        if (!slot.consumed) ++n;
    return n;
}

// ------------------------------------------------------------ record/replay

namespace {

std::uint64_t fnv1a(const std::string& data, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string request_digest(const CompletionRequest& request) {
    // Digest over (role, content) pairs plus temperature and schema id; field
    // ordering inside messages is fixed by construction.
    std::ostringstream key;
    for (const auto& m : request.messages)
        key << role_name(m.role) << '\x1f' << m.content << '\x1e';
    key << request.temperature << '\x1f'
        << (request.response_schema ? *request.response_schema : "");
    const std::string s = key.str();
    return hex64(fnv1a(s, 14695981039346656037ULL)) + hex64(fnv1a(s, 0x9e3779b97f4a7c15ULL));
}

RecordReplayBackend::RecordReplayBackend(RecordReplayMode mode,
                                         std::filesystem::path store_path,
                                         BackendHandle inner)
    : mode_(mode), store_path_(std::move(store_path)), inner_(std::move(inner)) {
    if (mode_ == RecordReplayMode::record) {
        if (!inner_)
            throw Error(ErrorCode::config_error, "record mode requires a live backend");
        std::error_code ec;
        std::filesystem::create_directories(store_path_, ec);
        if (ec) throw Error(ErrorCode::store_io_error, "cannot create store: " + store_path_.string());
    } else if (!std::filesystem::is_directory(store_path_)) {
        throw Error(ErrorCode::recording_missing,
                    "replay store does not exist: " + store_path_.string());
    }
}

std::string RecordReplayBackend::id() const {
    return mode_ == RecordReplayMode::record ? "record" : "replay";
}

CompletionResponse RecordReplayBackend::complete(const CompletionRequest& request) {
    const auto file = store_path_ / (request_digest(request) + ".json");
    std::lock_guard<std::mutex> lock(mutex_);
    if (mode_ == RecordReplayMode::replay) {
        std::ifstream in(file);
        if (!in)
            throw Error(ErrorCode::recording_missing,
                        "no recording for digest " + file.stem().string());
        json doc = json::parse(in, nullptr, false);
        if (doc.is_discarded())
            throw Error(ErrorCode::store_io_error, "corrupt recording: " + file.string());
        CompletionResponse resp;
        resp.content = doc.at("content").get<std::string>();
        resp.usage.prompt_tokens = doc["usage"].value("prompt", 0);
        resp.usage.completion_tokens = doc["usage"].value("completion", 0);
        resp.backend_id = id();
        return resp;
    }
    CompletionResponse resp = inner_->complete(request);
    json doc = {{"content", resp.content},
                {"usage", {{"prompt", resp.usage.prompt_tokens},
                           {"completion", resp.usage.completion_tokens}}}};
    std::ofstream out(file);
    if (!out) throw Error(ErrorCode::store_io_error, "cannot write recording: " + file.string());
    out << doc.dump(2) << '\n';
    return resp;
}

std::size_t RecordReplayBackend::stored_count() const {
    std::size_t n = 0;
    for (const auto& entry : std::filesystem::directory_iterator(store_path_))
        if (entry.path().extension() == ".json") ++n;
    return n;
}

// ----------------------------------------------------------------- schemas

namespace {

std::optional<std::string> require_string(const json& v, const char* key,
                                          bool non_empty = false) {
    if (!v.contains(key) || !v[key].is_string())
        return std::string("missing or non-string field: ") + key;
    if (non_empty && v[key].get<std::string>().empty())
        return std::string("field must be non-empty: ") + key;
    return std::nullopt;
}

std::optional<std::string> require_string_array(const json& v, const char* key) {
    if (!v.contains(key) || !v[key].is_array())
        return std::string("missing or non-array field: ") + key;
    for (const auto& item : v[key])
        if (!item.is_string()) return std::string("non-string element in: ") + key;
    return std::nullopt;
}

}  // namespace

std::optional<std::string> validate_insight_schema(const json& v) {
    if (!v.is_object()) return "insight must be an object";
    if (auto e = require_string(v, "vulnerability_type", true)) return e;
    if (auto e = require_string(v, "attack_vector")) return e;
    for (const char* key : {"vulnerable_params", "key_apis", "entry_points"})
        if (auto e = require_string_array(v, key)) return e;
    if (auto e = require_string(v, "summary")) return e;
    return std::nullopt;
}

std::optional<std::string> validate_plan_schema(const json& v) {
    if (!v.is_object()) return "plan must be an object";
    if (!v.contains("steps") || !v["steps"].is_array() || v["steps"].empty())
        return "plan requires a non-empty steps array";
    for (const auto& step : v["steps"]) {
        if (auto e = require_string(step, "description")) return e;
        if (auto e = require_string(step, "tool_id", true)) return e;
    }
    if (auto e = require_string_array(v, "payloads")) return e;
    return std::nullopt;
}

std::optional<std::string> validate_judgment_schema(const json& v) {
    if (!v.is_object()) return "judgment must be an object";
    if (auto e = require_string(v, "verdict", true)) return e;
    const auto verdict = v["verdict"].get<std::string>();
    if (verdict != "confirmed" && verdict != "rejected")
        return "verdict must be confirmed or rejected";
    if (!v.contains("confidence") || !v["confidence"].is_number())
        return "missing numeric confidence";
    if (auto e = require_string(v, "rationale")) return e;
    return std::nullopt;
}

std::optional<std::string> validate_reward_schema(const json& v) {
    if (!v.is_object()) return "reward must be an object";
    for (const char* key : {"tactical", "strategic"})
        if (!v.contains(key) || !v[key].is_number())
            return std::string("missing numeric field: ") + key;
    if (auto e = require_string(v, "state_tag", true)) return e;
    if (auto e = require_string(v, "feedback")) return e;
    if (auto e = require_string_array(v, "improvement_hints")) return e;
    return std::nullopt;
}

void SchemaRegistry::register_schema(const std::string& id, SchemaValidator validator) {
    validators_[id] = std::move(validator);
}

const SchemaValidator* SchemaRegistry::find(const std::string& id) const {
    auto it = validators_.find(id);
    return it == validators_.end() ? nullptr : &it->second;
}

SchemaRegistry SchemaRegistry::with_defaults() {
    SchemaRegistry reg;
    reg.register_schema("vulnerability_insight", validate_insight_schema);
    reg.register_schema("exploitation_plan", validate_plan_schema);
    reg.register_schema("oracle_judgment", validate_judgment_schema);
    reg.register_schema("reward_scores", validate_reward_schema);
    return reg;
}

// ----------------------------------------------------------------- gateway

Gateway::Gateway(BackendHandle backend, SchemaRegistry schemas,
                 std::int64_t run_token_budget)
    : backend_(std::move(backend)),
      schemas_(std::move(schemas)),
      run_token_budget_(run_token_budget) {
    if (!backend_) throw Error(ErrorCode::config_error, "gateway requires a backend");
}

CompletionResponse Gateway::complete(const CompletionRequest& request) {
    if (request.messages.empty())
        throw Error(ErrorCode::config_error, "completion request has no messages");
    CompletionResponse resp = backend_->complete(request);
    meter_ += resp.usage.total_tokens();
    ++call_count_;
    if (run_token_budget_ > 0 && meter_ > run_token_budget_)
        throw Error(ErrorCode::token_budget_exceeded,
                    "run token budget exceeded: " + std::to_string(meter_));
    return resp;
}

std::optional<std::string> extract_fenced_block(const std::string& text,
                                                std::string* fence_tag) {
    const auto open = text.find("```");
    if (open == std::string::npos) return std::nullopt;
    auto body_start = text.find('\n', open);
    if (body_start == std::string::npos) return std::nullopt;
    if (fence_tag) {
        std::string tag = text.substr(open + 3, body_start - open - 3);
        while (!tag.empty() && (tag.back() == '\r' || tag.back() == ' ')) tag.pop_back();
        *fence_tag = tag;
    }
    ++body_start;
    const auto close = text.find("```", body_start);
    if (close == std::string::npos) return std::nullopt;
    return text.substr(body_start, close - body_start);
}

json Gateway::complete_structured(const CompletionRequest& request) {
    if (!request.response_schema)
        throw Error(ErrorCode::config_error, "structured completion requires a schema id");
    const SchemaValidator* validator = schemas_.find(*request.response_schema);
    if (!validator)
        throw Error(ErrorCode::config_error,
                    "unknown schema id: " + *request.response_schema);

    CompletionRequest attempt = request;
    std::string last_error;
    for (int round = 0; round <= kRepairRetries; ++round) {
        CompletionResponse resp = complete(attempt);
        std::string body = resp.content;
        if (auto inner = extract_fenced_block(body)) body = *inner;
        json parsed = json::parse(body, nullptr, false);
        std::optional<std::string> problem;
        if (parsed.is_discarded())
            problem = "reply is not valid JSON";
        else
            problem = (*validator)(parsed);
        if (!problem) return parsed;
        last_error = *problem;
        attempt.add(Role::assistant, resp.content);
        attempt.add(Role::user,
                    "The previous reply was invalid: " + last_error +
                        ". Reply again with JSON only, matching the requested schema.");
    }
    throw Error(ErrorCode::schema_violation_after_retries,
                "structured output invalid after retries: " + last_error);
}

std::int64_t Gateway::total_tokens() const { return meter_; }

}  // namespace pocforge::llm
