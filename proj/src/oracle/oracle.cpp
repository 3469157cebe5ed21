#include "pocforge/oracle/oracle.hpp"

#include <algorithm>
#include <optional>
#include <regex>
#include <sstream>

namespace pocforge::oracle {

using llm::CompletionRequest;
using llm::Role;
using nlohmann::json;

std::vector<std::string> default_fatal_patterns() {
    return {"SyntaxError", "ModuleNotFoundError", "Cannot find module",
            R"(Traceback \(most recent call last\))"};
}

void to_json(json& j, const OracleConfig& c) {
    j = {{"success_markers", c.success_markers},
         {"evidence_patterns", c.evidence_patterns},
         {"fatal_patterns", c.fatal_patterns},
         {"expect_nonzero_exit", c.expect_nonzero_exit},
         {"differential_enabled", c.differential_enabled}};
}

void from_json(const json& j, OracleConfig& c) {
    c.success_markers = j.value("success_markers", std::vector<std::string>{});
    c.evidence_patterns = j.value("evidence_patterns", std::vector<std::string>{});
    c.fatal_patterns = j.value("fatal_patterns", default_fatal_patterns());
    c.expect_nonzero_exit = j.value("expect_nonzero_exit", false);
    c.differential_enabled = j.value("differential_enabled", false);
}

const char* outcome_name(Outcome outcome) {
    switch (outcome) {
        case Outcome::confirmed: return "confirmed";
        case Outcome::rejected: return "rejected";
        case Outcome::ambiguous: return "ambiguous";
    }
    return "ambiguous";
}

const char* layer_name(Layer layer) {
    switch (layer) {
        case Layer::L1: return "L1";
        case Layer::L2: return "L2";
        case Layer::L3: return "L3";
        case Layer::differential: return "differential";
    }
    return "L1";
}

namespace {

std::optional<std::string> first_regex_match(const std::vector<std::string>& patterns,
                                             const std::string& haystack) {
    for (const auto& p : patterns) {
        if (p.empty()) continue;
        try {
            if (std::regex_search(haystack, std::regex(p))) return p;
        } catch (const std::regex_error&) {
            // A broken pattern in config must not crash verification.
            if (haystack.find(p) != std::string::npos) return p;
        }
    }
    return std::nullopt;
}

}  // namespace

OracleVerdict OracleEngine::verify_l1(const exec::ExecutionResult& result,
                                      const OracleConfig& config) {
    ++stats_.l1_calls;
    OracleVerdict v;
    v.layer = Layer::L1;
    v.confidence = 1.0;

    if (result.timed_out) {
        if (config.expect_nonzero_exit) {
            v.outcome = Outcome::confirmed;
            v.evidence = {"timeout-as-DoS"};
        } else {
            v.outcome = Outcome::rejected;
            v.evidence = {"timeout"};
        }
        return v;
    }
    if (auto fatal = first_regex_match(config.fatal_patterns, result.stderr_text)) {
        v.outcome = Outcome::rejected;
        v.evidence = {"fatal-pattern: " + *fatal};
        return v;
    }
    if (result.exit_code && *result.exit_code != 0) {
        if (config.expect_nonzero_exit) {
            v.outcome = Outcome::confirmed;
            v.evidence = {"nonzero-exit-as-crash"};
        } else {
            v.outcome = Outcome::rejected;
            v.evidence = {"nonzero-exit: " + std::to_string(*result.exit_code)};
        }
        return v;
    }
    v.outcome = Outcome::ambiguous;
    v.confidence = 0.0;
    return v;
}

OracleVerdict OracleEngine::verify_l2(const exec::ExecutionResult& result,
                                      const OracleConfig& config) {
    ++stats_.l2_calls;
    OracleVerdict v;
    v.layer = Layer::L2;

    for (const auto& marker : config.success_markers) {
        if (!marker.empty() && result.stdout_text.find(marker) != std::string::npos) {
            v.outcome = Outcome::confirmed;
            v.confidence = 1.0;
            v.evidence = {"marker: " + marker};
            return v;
        }
    }
    const std::string combined = result.stdout_text + "\n" + result.stderr_text;
    if (auto pattern = first_regex_match(config.evidence_patterns, combined)) {
        v.outcome = Outcome::confirmed;
        v.confidence = 0.8;
        v.evidence = {"evidence-pattern: " + *pattern};
        return v;
    }
    v.outcome = Outcome::ambiguous;
    v.confidence = 0.0;
    return v;
}

OracleVerdict OracleEngine::verify_l3(const exec::ExecutionResult& result,
                                      const planner::VulnerabilityInsight& context,
                                      llm::Gateway& gateway) {
    ++stats_.l3_calls;
    OracleVerdict v;
    v.layer = Layer::L3;

    CompletionRequest req;
    req.response_schema = "oracle_judgment";
    req.add(Role::system,
            "You judge whether an exploit execution demonstrates the vulnerability. "
            "Reply with JSON: {verdict: \"confirmed\"|\"rejected\", confidence: "
            "number, rationale: string}.");
    std::ostringstream body;
    body << "Task: judge execution output\n"
         << "Vulnerability: " << json(context).dump() << "\n"
         << "Exit code: "
         << (result.exit_code ? std::to_string(*result.exit_code) : "none") << "\n"
         << "Stdout:\n" << result.stdout_text << "\nStderr:\n" << result.stderr_text << "\n";
    req.add(Role::user, body.str());

    try {
        json reply = gateway.complete_structured(req);
        v.outcome = reply["verdict"] == "confirmed" ? Outcome::confirmed : Outcome::rejected;
        v.confidence = std::clamp(reply["confidence"].get<double>(), 0.0, 1.0);
        v.evidence = {reply.value("rationale", "")};
        if (v.evidence.front().empty()) v.evidence = {"judge-decision"};
    } catch (const Error&) {
        // Fail closed: an unavailable judge never confirms.
        v.outcome = Outcome::rejected;
        v.confidence = 1.0;
        v.evidence = {"judge-unavailable"};
    }
    return v;
}

OracleVerdict OracleEngine::verify(const exec::ExecutionResult& result,
                                   const OracleConfig& config,
                                   const planner::VulnerabilityInsight& context,
                                   llm::Gateway& gateway) {
    OracleVerdict l1 = verify_l1(result, config);
    if (l1.outcome != Outcome::ambiguous) return l1;
    OracleVerdict l2 = verify_l2(result, config);
    if (l2.outcome == Outcome::confirmed) return l2;
    return verify_l3(result, context, gateway);
}

OracleVerdict OracleEngine::differential_check(const exec::PoCArtifact& artifact,
                                               const exec::SandboxSpec& vulnerable_env,
                                               const exec::SandboxSpec& patched_env,
                                               const OracleConfig& config,
                                               const planner::VulnerabilityInsight& context,
                                               llm::Gateway& gateway) {
    OracleVerdict v;
    v.layer = Layer::differential;
    v.confidence = 1.0;

    exec::ExecutionResult on_vulnerable = exec::execute(artifact, vulnerable_env);
    OracleVerdict vuln_verdict = verify(on_vulnerable, config, context, gateway);
    if (vuln_verdict.outcome != Outcome::confirmed) {
        v.outcome = Outcome::rejected;
        v.evidence = {"vulnerable-side-not-confirmed"};
        return v;
    }

    exec::ExecutionResult on_patched = exec::execute(artifact, patched_env);
    OracleVerdict patched_verdict = verify(on_patched, config, context, gateway);
    if (patched_verdict.outcome == Outcome::confirmed) {
        v.outcome = Outcome::rejected;
        v.evidence = {"nonspecific-trigger"};
        return v;
    }

    v.outcome = Outcome::confirmed;
    v.evidence = {"specificity-holds"};
    return v;
}

}  // namespace pocforge::oracle
