#include <cstdlib>

#include <httplib.h>

#include "pocforge/llm/gateway.hpp"

namespace pocforge::llm {

HttpBackend::HttpBackend(Config config) : config_(std::move(config)) {
    if (config_.base_url.empty())
        throw Error(ErrorCode::config_error, "http backend requires a base URL");
}

CompletionResponse HttpBackend::complete(const CompletionRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages)
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    json body = {{"model", config_.model},
                 {"messages", messages},
                 {"temperature", request.temperature},
                 {"max_tokens", request.max_tokens}};

    httplib::Client client(config_.base_url);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
        headers.emplace(config_.auth_header, std::string("Bearer ") + key);

    auto res = client.Post(config_.endpoint_path, headers, body.dump(), "application/json");
    if (!res || res->status < 200 || res->status >= 300)
        throw Error(ErrorCode::backend_unreachable,
                    "chat-completion request failed against " + config_.base_url +
                        (res ? " (status " + std::to_string(res->status) + ")" : ""));

    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
        throw Error(ErrorCode::backend_unreachable, "malformed chat-completion response");

    CompletionResponse out;
    out.content = doc["choices"][0]["message"].value("content", "");
    if (doc.contains("usage")) {
        out.usage.prompt_tokens = doc["usage"].value("prompt_tokens", 0);
        out.usage.completion_tokens = doc["usage"].value("completion_tokens", 0);
    }
    out.backend_id = id();
    return out;
}

}  // namespace pocforge::llm
