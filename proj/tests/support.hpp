#pragma once

// Helpers shared by the unit suites and the acceptance binary: fixture
// locations, temp directories, and the canned-conversation scripts that
// drive the engine deterministically.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pocforge/engine/orchestrator.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using nlohmann::json;

inline fs::path fixture_dir() { return fs::path(POCFORGE_FIXTURE_DIR); }
inline fs::path repo(const std::string& name) { return fixture_dir() / "repos" / name; }

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "pocforge-test-XXXXXX").string();
        char* made = ::mkdtemp(tmpl.data());
        if (!made) throw std::runtime_error("mkdtemp failed");
        path_ = made;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    out << content;
}

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

// ------------------------------------------------------------- script pieces

// Prompt anchors emitted by the agents; scripts key their replies on these.
inline constexpr const char* kInsightTag = "Task: extract vulnerability insight";
inline constexpr const char* kPlanTag = "Task: generate exploitation plan";
inline constexpr const char* kSynthTag = "Task: synthesize proof-of-concept";
inline constexpr const char* kRefineTag = "Task: refine proof-of-concept";
inline constexpr const char* kJudgeTag = "Task: judge execution output";
inline constexpr const char* kRewardTag = "Task: score execution result";

inline json entry(const std::string& match, const std::string& reply, bool sticky = false,
                  int prompt_tokens = 100, int completion_tokens = 20) {
    json e = {{"reply", reply},
              {"usage", {{"prompt", prompt_tokens}, {"completion", completion_tokens}}}};
    if (!match.empty()) e["match"] = match;
    if (sticky) e["sticky"] = true;
    return e;
}

inline std::string fenced_js(const std::string& code) {
    return "```js\n" + code + "\n```";
}

inline fs::path write_script(const json& entries, const fs::path& path) {
    write_file(path, json{{"entries", entries}}.dump(2));
    return path;
}

// ----------------------------------------------------------------- insights

inline std::string proto_insight_reply() {
    return json{{"vulnerability_type", "Prototype Pollution"},
                {"attack_vector", "package-function-call"},
                {"vulnerable_params", {"path"}},
                {"key_apis", {"setIn"}},
                {"entry_points", json::array()},
                {"summary",
                 "A crafted path argument pollutes Object.prototype via the deep setter."}}
        .dump();
}

inline std::string cmdi_insight_reply() {
    return json{{"vulnerability_type", "Command Injection"},
                {"attack_vector", "package-function-call"},
                {"vulnerable_params", {"host"}},
                {"key_apis", {"execSync"}},
                {"entry_points", json::array()},
                {"summary", "The host argument is concatenated into a shell command."}}
        .dump();
}

inline std::string traversal_insight_reply() {
    return json{{"vulnerability_type", "Path Traversal"},
                {"attack_vector", "package-function-call"},
                {"vulnerable_params", {"name"}},
                {"key_apis", {"readFileSync", "join"}},
                {"entry_points", json::array()},
                {"summary", "Relative path segments escape the base directory."}}
        .dump();
}

// -------------------------------------------------------------------- plans

inline std::string plan_reply(const std::string& tool_id,
                              const std::vector<std::string>& payloads) {
    return json{{"steps",
                 {{{"description", "Drive the vulnerable entry point"},
                   {"tool_id", tool_id}}}},
                {"payloads", payloads}}
        .dump();
}

// ------------------------------------------------------------------- judges

inline std::string judge_rejected_reply() {
    return json{{"verdict", "rejected"},
                {"confidence", 0.7},
                {"rationale", "No evidence of successful exploitation in the output."}}
        .dump();
}

inline std::string judge_confirmed_reply() {
    return json{{"verdict", "confirmed"},
                {"confidence", 0.9},
                {"rationale", "The output demonstrates the vulnerability."}}
        .dump();
}

// ------------------------------------------------------------------ rewards

inline std::string reward_reply(double tactical, double strategic,
                                const std::string& state_tag, const std::string& feedback,
                                const std::vector<std::string>& hints,
                                const std::string& error_type,
                                const std::string& suggested_route) {
    json r = {{"tactical", tactical},
              {"strategic", strategic},
              {"state_tag", state_tag},
              {"feedback", feedback},
              {"improvement_hints", hints}};
    if (!error_type.empty()) r["error_type"] = error_type;
    if (!suggested_route.empty()) r["suggested_route"] = suggested_route;
    return r.dump();
}

inline std::string reward_exploited_reply() {
    return reward_reply(0.8, 8.0, "exploited", "Exploitation confirmed by the oracle.",
                        {}, "", "success");
}

// --------------------------------------------------------------- poc source

inline std::string proto_probe_poc() {
    return R"JS(const setIn = require(process.env.TARGET_REPO + '/index.js');
const obj = {};
setIn(obj, '__proto__.polluted', 'yes');
if (({}).polluted === 'yes') {
  console.log('POC_SUCCESS');
} else {
  console.log('pollution not achieved');
})JS";
}

inline std::string proto_bare_require_poc() {
    return R"JS(const setIn = require('set-in');
const obj = {};
setIn(obj, '__proto__.polluted', 'yes');
if (({}).polluted === 'yes') {
  console.log('POC_SUCCESS');
} else {
  console.log('pollution not achieved');
})JS";
}

inline std::string known_failure_poc() {
    return R"JS(var ready = false;
if (ready) {
  console.log('POC_SUCCESS');
}
console.log('Steps skipped (KnownFailure)');)JS";
}

inline std::string proto_exploit_poc() {
    return R"JS(const setIn = require(process.env.TARGET_REPO + '/index.js');
const obj = {};
setIn(obj, ['__proto__', 'polluted'], 'yes');
if (({}).polluted === 'yes') {
  console.log('Object.prototype.polluted = "yes"');
  console.log('POC_SUCCESS');
} else {
  console.log('pollution not achieved');
})JS";
}

inline std::string cmdi_specific_poc() {
    return R"JS(const ping = require(process.env.TARGET_REPO + '/index.js');
const out = ping('127.0.0.1; echo INJECTED_OK');
if (out.split('\n').indexOf('INJECTED_OK') !== -1) {
  console.log('POC_SUCCESS');
} else {
  console.log('injection failed');
})JS";
}

inline std::string cmdi_nonspecific_poc() {
    return R"JS(const ping = require(process.env.TARGET_REPO + '/index.js');
ping('127.0.0.1');
console.log('POC_SUCCESS');)JS";
}

inline std::string traversal_poc() {
    return R"JS(const readFile = require(process.env.TARGET_REPO + '/index.js');
const text = readFile(process.env.TARGET_REPO + '/data', '../secret.txt');
if (text.indexOf('TOP-SECRET') !== -1) {
  console.log('POC_SUCCESS');
} else {
  console.log('traversal failed');
})JS";
}

// ------------------------------------------------------------- full scripts

/// Five-iteration reference trajectory: refine, resynthesize, replan,
/// replan-with-fallback, success. Seventeen entries consumed in order.
inline json golden_script_entries() {
    json entries = json::array();
    entries.push_back(entry(kInsightTag, proto_insight_reply()));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call",
                                                 {"__proto__.polluted=yes"})));
    entries.push_back(entry(kSynthTag, fenced_js(proto_probe_poc())));
    entries.push_back(entry(kJudgeTag, judge_rejected_reply()));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(0.0, 8.0, "partial_exec",
                     "Payload failed but reached the vulnerable call.",
                     {"Adjust payload format.", "Try constructor.prototype path."},
                     "logic_error", "refine")));
    entries.push_back(entry(kRefineTag, fenced_js(proto_bare_require_poc())));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(-1.0, 0.0, "module_error",
                     "Cannot find module 'set-in'. PoC cannot start.",
                     {"Load the target module from TARGET_REPO."}, "module_error",
                     "resynthesize")));
    entries.push_back(entry(kSynthTag, fenced_js(known_failure_poc())));
    entries.push_back(entry(kJudgeTag, judge_rejected_reply()));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(0.0, 0.0, "no_progress",
                     "Steps skipped (KnownFailure). Exit code: 0.",
                     {"Resolve environment configuration.", "Verify package path."},
                     "env_missing", "replan")));
    entries.push_back(entry(kPlanTag, plan_reply("container_script_runner",
                                                 {"__proto__.polluted=yes"})));
    entries.push_back(entry(kSynthTag, fenced_js(known_failure_poc())));
    entries.push_back(entry(kJudgeTag, judge_rejected_reply()));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(0.0, 0.0, "no_progress",
                     "Consecutive failures detected. System triggers fallback.",
                     {"Switch to Node executor.", "Use pre-configured environment."},
                     "env_missing", "replan")));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call",
                                                 {"__proto__.polluted=yes"})));
    entries.push_back(entry(kSynthTag, fenced_js(proto_exploit_poc())));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(0.8, 8.0, "exploited",
                     "Node execution succeeded; Object.prototype was polluted.", {},
                     "", "success")));
    return entries;
}

struct GoldenRow {
    const char* state_tag;
    double tactical;
    double strategic;
    pocforge::refiner::Route route;
    bool fallback;
};

inline std::vector<GoldenRow> golden_rows() {
    using pocforge::refiner::Route;
    return {{"partial_exec", 0.0, 8.0, Route::refine, false},
            {"module_error", -1.0, 0.0, Route::resynthesize, false},
            {"no_progress", 0.0, 0.0, Route::replan, false},
            {"no_progress", 0.0, 0.0, Route::replan, true},
            {"exploited", 0.8, 8.0, Route::success, false}};
}

inline std::int64_t golden_script_tokens() {
    return 17 * 120;  // every entry carries the default 100+20 usage
}

/// Every iteration fails fatally; the run must consume the full
/// cycles-times-iterations budget and stop.
inline json exhaustion_script_entries() {
    json entries = json::array();
    entries.push_back(entry(kInsightTag, proto_insight_reply(), true));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call",
                                                 {"__proto__.polluted=yes"}),
                            true));
    entries.push_back(entry(kSynthTag, fenced_js("require('missing-module-zzz');"), true));
    entries.push_back(entry(kJudgeTag, judge_rejected_reply(), true));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(-1.0, 0.0, "module_error", "The module could not be loaded.",
                     {"Install the dependency."}, "module_error", "resynthesize"),
        true));
    return entries;
}

/// The synthesized PoC never terminates; used against a short wall clock.
inline json sleepy_script_entries() {
    json entries = json::array();
    entries.push_back(entry(kInsightTag, proto_insight_reply(), true));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call",
                                                 {"__proto__.polluted=yes"}),
                            true));
    entries.push_back(entry(kSynthTag, fenced_js("setTimeout(function () {}, 60000);"),
                            true));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(-1.0, 0.0, "no_progress", "Execution timed out.", {},
                     "logic_error", "resynthesize"),
        true));
    return entries;
}

/// Single-iteration end-to-end success scripts per fixture repo.
inline json e2e_script_entries(const std::string& insight_reply,
                               const std::string& poc_source) {
    json entries = json::array();
    entries.push_back(entry(kInsightTag, insight_reply));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call", {})));
    entries.push_back(entry(kSynthTag, fenced_js(poc_source)));
    entries.push_back(entry(kRewardTag, reward_exploited_reply()));
    return entries;
}

/// First attempt is a nonspecific trigger that the differential check rejects;
/// the refinement is specific and passes.
inline json differential_script_entries() {
    json entries = json::array();
    entries.push_back(entry(kInsightTag, cmdi_insight_reply()));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call",
                                                 {"; echo INJECTED_OK"})));
    entries.push_back(entry(kSynthTag, fenced_js(cmdi_nonspecific_poc())));
    entries.push_back(entry("Oracle: confirmed", reward_exploited_reply()));
    entries.push_back(entry(kRefineTag, fenced_js(cmdi_specific_poc())));
    entries.push_back(entry("Oracle: confirmed", reward_exploited_reply()));
    entries.push_back(entry(kJudgeTag, judge_rejected_reply()));
    return entries;
}

/// With experience indexing the cycle-1 replanning prompt carries the stored
/// hint, unlocking the working plan; without it the run never converges.
inline json ablation_script_entries() {
    json entries = json::array();
    entries.push_back(entry(kInsightTag, cmdi_insight_reply(), true));
    entries.push_back(entry("Use the array path form",
                            plan_reply("node_function_call", {"ARRAYPATH"})));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call", {"BASICPATH"}),
                            true));
    entries.push_back(entry("ARRAYPATH", fenced_js("console.log('POC_SUCCESS');")));
    entries.push_back(entry(kSynthTag, fenced_js(R"JS(var ready = false;
if (ready) {
  console.log('POC_SUCCESS');
}
console.log('attempt A failed');)JS"),
                            true));
    entries.push_back(entry(kJudgeTag, judge_rejected_reply(), true));
    entries.push_back(entry("Oracle: confirmed", reward_exploited_reply()));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(0.0, 0.0, "no_progress", "Payload shape is wrong for this API.",
                     {"Use the array path form"}, "env_missing", "replan"),
        true));
    return entries;
}

/// Succeeds immediately regardless of experience; ablation deltas are zero.
inline json control_script_entries() {
    json entries = json::array();
    entries.push_back(entry(kInsightTag, cmdi_insight_reply(), true));
    entries.push_back(entry(kPlanTag, plan_reply("node_function_call", {}), true));
    entries.push_back(entry(kSynthTag, fenced_js("console.log('POC_SUCCESS');"), true));
    entries.push_back(entry("Oracle: confirmed", reward_exploited_reply(), true));
    return entries;
}

/// Serves a mixed dataset: descriptions tagged GOOD-ENTRY succeed in one
/// iteration, BAD-ENTRY runs fail fatally every iteration.
inline json bench_script_entries() {
    json entries = json::array();
    entries.push_back(entry("GOOD-ENTRY", cmdi_insight_reply()));
    entries.push_back(entry("BAD-ENTRY", traversal_insight_reply()));
    entries.push_back(entry("Command Injection",
                            plan_reply("node_function_call", {"PAYLOAD_ALPHA"})));
    entries.push_back(entry("Path Traversal",
                            plan_reply("node_function_call", {"PAYLOAD_BETA"})));
    entries.push_back(entry("PAYLOAD_ALPHA", fenced_js("console.log('POC_SUCCESS');")));
    entries.push_back(entry("PAYLOAD_BETA", fenced_js("require('missing-module-zzz');"),
                            true));
    entries.push_back(entry("Oracle: confirmed", reward_exploited_reply()));
    entries.push_back(entry(
        kRewardTag,
        reward_reply(-1.0, 0.0, "module_error", "The module could not be loaded.",
                     {"Install the dependency."}, "module_error", "resynthesize"),
        true));
    return entries;
}

// ------------------------------------------------------------ reports et al.

inline pocforge::planner::VulnerabilityReport set_in_report() {
    pocforge::planner::VulnerabilityReport r;
    r.cve_id = "CVE-2099-1001";
    r.description = "Prototype pollution in the deep property setter.";
    r.package = "set-in-like";
    r.version = "1.0.0";
    r.repo_path = repo("set-in");
    return r;
}

inline pocforge::planner::VulnerabilityReport cmdi_report(bool with_patched = false) {
    pocforge::planner::VulnerabilityReport r;
    r.cve_id = "CVE-2099-1002";
    r.description = "Command injection via the host argument of the ping helper.";
    r.package = "ping-helper";
    r.version = "2.3.0";
    r.repo_path = repo("cmdi");
    if (with_patched) r.patched_path = repo("cmdi_patched");
    return r;
}

inline pocforge::planner::VulnerabilityReport traversal_report() {
    pocforge::planner::VulnerabilityReport r;
    r.cve_id = "CVE-2099-1003";
    r.description = "Path traversal through unsanitised file names.";
    r.package = "file-server-lite";
    r.version = "0.9.2";
    r.repo_path = repo("traversal");
    return r;
}

inline pocforge::engine::EngineConfig scripted_config(const fs::path& script,
                                                      const fs::path& out_dir) {
    pocforge::engine::EngineConfig cfg;
    cfg.backend.kind = pocforge::engine::BackendConfig::Kind::scripted;
    cfg.backend.script_path = script.string();
    cfg.out_dir = out_dir;
    return cfg;
}

/// Pass-through backend recording every request/response pair.
class CapturingBackend : public pocforge::llm::Backend {
public:
    explicit CapturingBackend(pocforge::llm::BackendHandle inner)
        : inner_(std::move(inner)) {}

    std::string id() const override { return "capture:" + inner_->id(); }

    pocforge::llm::CompletionResponse complete(
        const pocforge::llm::CompletionRequest& request) override {
        requests.push_back(request);
        pocforge::llm::CompletionResponse resp = inner_->complete(request);
        usage_sum += resp.usage.total_tokens();
        return resp;
    }

    std::vector<pocforge::llm::CompletionRequest> requests;
    std::int64_t usage_sum = 0;

private:
    pocforge::llm::BackendHandle inner_;
};

/// Number of "- " bullet lines following "Prior experience:" in a prompt.
inline int experience_bullets(const std::string& prompt) {
    const auto pos = prompt.find("Prior experience:\n");
    if (pos == std::string::npos) return 0;
    int count = 0;
    std::istringstream lines(prompt.substr(pos + std::string("Prior experience:\n").size()));
    std::string line;
    while (std::getline(lines, line) && line.rfind("- ", 0) == 0) ++count;
    return count;
}

}  // namespace testsupport
