#include "pocforge/refiner/refiner.hpp"

#include <algorithm>
#include <sstream>

namespace pocforge::refiner {

using llm::CompletionRequest;
using llm::Role;
using nlohmann::json;

const char* route_name(Route route) {
    switch (route) {
        case Route::success: return "success";
        case Route::refine: return "refine";
        case Route::resynthesize: return "resynthesize";
        case Route::replan: return "replan";
    }
    return "replan";
}

Route route_from_name(const std::string& name) {
    if (name == "success") return Route::success;
    if (name == "refine") return Route::refine;
    if (name == "resynthesize" || name == "resynth") return Route::resynthesize;
    if (name == "replan") return Route::replan;
    throw Error(ErrorCode::parse_error, "unknown route: " + name);
}

const char* failure_category_name(FailureCategory category) {
    switch (category) {
        case FailureCategory::wrong_tool: return "wrong_tool";
        case FailureCategory::syntax_error: return "syntax_error";
        case FailureCategory::env_missing: return "env_missing";
        case FailureCategory::module_error: return "module_error";
        case FailureCategory::logic_error: return "logic_error";
        case FailureCategory::unknown: return "unknown";
    }
    return "unknown";
}

FailureCategory failure_category_from_name(const std::string& name) {
    if (name == "wrong_tool") return FailureCategory::wrong_tool;
    if (name == "syntax_error") return FailureCategory::syntax_error;
    if (name == "env_missing") return FailureCategory::env_missing;
    if (name == "module_error") return FailureCategory::module_error;
    if (name == "logic_error") return FailureCategory::logic_error;
    return FailureCategory::unknown;
}

std::string RewardRecord::summary() const {
    std::ostringstream out;
    out << "[" << record_id << "] iter=" << iteration << " state=" << state_tag
        << " tac=" << tactical_score << " str=" << strategic_score;
    if (error_type) out << " error=" << failure_category_name(*error_type);
    if (!improvement_hints.empty()) out << " hint=" << improvement_hints.front();
    return out.str();
}

void to_json(json& j, const RewardRecord& r) {
    j = {{"record_id", r.record_id},
         {"iteration", r.iteration},
         {"tactical_score", r.tactical_score},
         {"strategic_score", r.strategic_score},
         {"state_tag", r.state_tag},
         {"feedback", r.feedback},
         {"improvement_hints", r.improvement_hints},
         {"metadata",
          {{"tools_used", r.tools_used}}},
         {"suggested_route", route_name(r.suggested_route)},
         {"oracle_confirmed", r.oracle_confirmed}};
    if (r.error_type) j["metadata"]["error_type"] = failure_category_name(*r.error_type);
}

void from_json(const json& j, RewardRecord& r) {
    r.record_id = j.at("record_id").get<std::string>();
    r.iteration = j.value("iteration", 0);
    r.tactical_score = j.value("tactical_score", 0.0);
    r.strategic_score = j.value("strategic_score", 0.0);
    r.state_tag = j.value("state_tag", "");
    r.feedback = j.value("feedback", "");
    r.improvement_hints = j.value("improvement_hints", std::vector<std::string>{});
    if (j.contains("metadata")) {
        const auto& meta = j["metadata"];
        r.tools_used = meta.value("tools_used", std::vector<std::string>{});
        if (meta.contains("error_type"))
            r.error_type = failure_category_from_name(meta["error_type"].get<std::string>());
    }
    r.suggested_route = route_from_name(j.value("suggested_route", "replan"));
    r.oracle_confirmed = j.value("oracle_confirmed", false);
}

// ---------------------------------------------------------------- scoring

namespace {

FailureCategory categorize(const oracle::OracleVerdict& verdict,
                           const exec::ExecutionResult& result) {
    if (verdict.outcome == oracle::Outcome::confirmed) return FailureCategory::unknown;
    const std::string& err = result.stderr_text;
    if (err.find("Cannot find module") != std::string::npos ||
        err.find("ModuleNotFoundError") != std::string::npos)
        return FailureCategory::module_error;
    if (err.find("SyntaxError") != std::string::npos)
        return FailureCategory::syntax_error;
    if (err.find("No such file") != std::string::npos ||
        err.find("command not found") != std::string::npos ||
        (result.exit_code && *result.exit_code == 127))
        return FailureCategory::env_missing;
    if (verdict.layer == oracle::Layer::L1) return FailureCategory::logic_error;
    return FailureCategory::unknown;
}

}  // namespace

RewardRecord fallback_reward(const oracle::OracleVerdict& verdict,
                             const exec::ExecutionResult& result, int iteration,
                             const std::string& run_id) {
    RewardRecord r;
    r.record_id = run_id + "/" + std::to_string(iteration);
    r.iteration = iteration;
    const bool confirmed = verdict.outcome == oracle::Outcome::confirmed;
    const bool l1_fatal = verdict.layer == oracle::Layer::L1 &&
                          verdict.outcome == oracle::Outcome::rejected;
    if (confirmed) {
        r.tactical_score = 0.8;
        r.strategic_score = 8.0;
        r.state_tag = "exploited";
        r.feedback = "Oracle confirmed exploitation.";
        r.suggested_route = Route::success;
        r.oracle_confirmed = true;
    } else if (l1_fatal) {
        r.tactical_score = -1.0;
        r.strategic_score = 0.0;
        r.state_tag = failure_category_name(categorize(verdict, result));
        r.feedback = verdict.evidence.empty() ? "Fatal execution failure."
                                              : verdict.evidence.front();
        r.suggested_route = Route::resynthesize;
    } else {
        r.tactical_score = 0.0;
        r.strategic_score = 4.0;
        r.state_tag = "partial_exec";
        r.feedback = "Execution completed but exploitation was not confirmed.";
        r.suggested_route = Route::refine;
    }
    r.error_type = confirmed ? std::nullopt
                             : std::optional<FailureCategory>(categorize(verdict, result));
    return r;
}

RewardRecord shape_reward(const oracle::OracleVerdict& verdict,
                          const exec::ExecutionResult& result,
                          const planner::VulnerabilityInsight& context, int iteration,
                          const std::string& run_id, llm::Gateway& gateway,
                          RewardStore& store) {
    const bool confirmed = verdict.outcome == oracle::Outcome::confirmed;
    const bool l1_fatal = verdict.layer == oracle::Layer::L1 &&
                          verdict.outcome == oracle::Outcome::rejected;

    RewardRecord r;
    try {
        CompletionRequest req;
        req.response_schema = "reward_scores";
        req.add(Role::system,
                "You score an exploitation attempt along two axes. Tactical score "
                "in [-1,1]: code-level correctness. Strategic score in [0,10]: "
                "soundness of the attack strategy. Reply with JSON: {tactical, "
                "strategic, state_tag, feedback, improvement_hints: [string], "
                "error_type?: string, suggested_route?: string}.");
        std::ostringstream body;
        body << "Task: score execution result\n"
             << "Vulnerability: " << json(context).dump() << "\n"
             << "Oracle: " << oracle::outcome_name(verdict.outcome) << " at "
             << oracle::layer_name(verdict.layer) << "\n"
             << "Exit code: "
             << (result.exit_code ? std::to_string(*result.exit_code) : "none") << "\n"
             << "Timed out: " << (result.timed_out ? "yes" : "no") << "\n"
             << "Stdout:\n" << result.stdout_text << "\nStderr:\n"
             << result.stderr_text << "\n";
        req.add(Role::user, body.str());

        json reply = gateway.complete_structured(req);
        r.tactical_score = reply["tactical"].get<double>();
        r.strategic_score = reply["strategic"].get<double>();
        r.state_tag = reply["state_tag"].get<std::string>();
        r.feedback = reply.value("feedback", "");
        r.improvement_hints = reply.value("improvement_hints", std::vector<std::string>{});
        if (reply.contains("error_type"))
            r.error_type = failure_category_from_name(reply["error_type"].get<std::string>());
        if (reply.contains("suggested_route"))
            r.suggested_route = route_from_name(reply["suggested_route"].get<std::string>());
        else
            r.suggested_route = confirmed ? Route::success : Route::refine;
    } catch (const Error&) {
        r = fallback_reward(verdict, result, iteration, run_id);
    }

    // Out-of-range judge scores are clamped, and the clamping surfaces in the
    // feedback text.
    if (r.tactical_score < -1.0 || r.tactical_score > 1.0 ||
        r.strategic_score < 0.0 || r.strategic_score > 10.0)
        r.feedback += " [scores clamped to range]";
    r.tactical_score = std::clamp(r.tactical_score, -1.0, 1.0);
    r.strategic_score = std::clamp(r.strategic_score, 0.0, 10.0);

    // Deterministic clamps the judge cannot override.
    if (confirmed) {
        r.strategic_score = std::max(r.strategic_score, 8.0);
        r.suggested_route = Route::success;
        r.oracle_confirmed = true;
        if (r.state_tag.empty()) r.state_tag = "exploited";
    } else if (l1_fatal) {
        r.tactical_score = -1.0;
    }
    if (!r.error_type && !confirmed) r.error_type = categorize(verdict, result);

    r.record_id = run_id + "/" + std::to_string(iteration);
    r.iteration = iteration;
    store.store_reward(r);
    return r;
}

// ---------------------------------------------------------------- routing

Route route(const RewardRecord& record, const std::vector<RewardRecord>& history,
            const BudgetState& budget, int escalation_window) {
    // Confirmed-verdict dominance.
    if (record.oracle_confirmed) return Route::success;

    Route decision;
    if (record.tactical_score <= -0.5)
        decision = Route::resynthesize;
    else if (record.strategic_score >= 6.0)
        decision = Route::refine;
    else
        decision = Route::replan;

    if (decision == Route::refine && escalation_window > 0 &&
        static_cast<int>(history.size()) >= escalation_window) {
        // W consecutive refines with no strategic improvement escalate to replan.
        bool all_refine = true;
        double prior_max = 0.0;
        for (int i = 0; i < escalation_window; ++i) {
            const RewardRecord& prev = history[history.size() - 1 - i];
            if (prev.suggested_route != Route::refine) all_refine = false;
            prior_max = std::max(prior_max, prev.strategic_score);
        }
        if (all_refine && record.strategic_score <= prior_max) decision = Route::replan;
    }

    if (decision != Route::success && budget.tactical_exhausted())
        decision = Route::replan;

    return decision;
}

// ---------------------------------------------------------------- refine

exec::PoCArtifact refine(const exec::PoCArtifact& artifact, const RewardRecord& record,
                         const planner::ExploitationPlan& plan, llm::Gateway& gateway) {
    CompletionRequest req;
    req.add(Role::system,
            "You repair proof-of-concept exploits with minimal targeted edits, "
            "keeping the attack strategy. Reply with a single fenced code block. "
            "If only the launch command must change, reply with the unchanged "
            "code and add a line 'ENTRY: <command...>' outside the fence.");
    std::ostringstream body;
    body << "Task: refine proof-of-concept\n"
         << "Plan id: " << plan.plan_id << "\n"
         << "Failure state: " << record.state_tag << "\n";
    if (record.error_type)
        body << "Error type: " << failure_category_name(*record.error_type) << "\n";
    body << "Feedback: " << record.feedback << "\nImprovement hints:\n";
    for (const auto& hint : record.improvement_hints) body << "- " << hint << "\n";
    body << "Current code:\n```\n" << artifact.source << "\n```\n";
    req.add(Role::user, body.str());

    for (int round = 0; round <= llm::Gateway::kRepairRetries; ++round) {
        llm::CompletionResponse resp = gateway.complete(req);
        std::string fence_tag;
        auto block = llm::extract_fenced_block(resp.content, &fence_tag);
        std::optional<std::vector<std::string>> entry;
        {
            std::istringstream lines(resp.content);
            std::string line;
            while (std::getline(lines, line)) {
                if (line.rfind("ENTRY:", 0) == 0) {
                    std::istringstream words(line.substr(6));
                    std::vector<std::string> argv;
                    std::string w;
                    while (words >> w) argv.push_back(w);
                    if (!argv.empty()) entry = argv;
                }
            }
        }
        if (block && !block->empty()) {
            const bool source_changed = *block != artifact.source;
            const bool entry_changed = entry && *entry != artifact.entry_command;
            if (source_changed || entry_changed) {
                exec::PoCArtifact refined = artifact;
                refined.source = *block;
                if (entry) refined.entry_command = *entry;
                // Keep markers consistent with the new source.
                std::vector<std::string> markers;
                for (const auto& m : plan.oracle_config.success_markers)
                    if (refined.source.find(m) != std::string::npos) markers.push_back(m);
                if (!markers.empty()) refined.success_markers = markers;
                return refined;
            }
        }
        req.add(Role::assistant, resp.content);
        req.add(Role::user,
                "The reply must contain a fenced code block that differs from the "
                "current code (or an ENTRY: line changing the launch command).");
    }
    throw Error(ErrorCode::no_code_block,
                "refinement produced no usable modification after retries");
}

}  // namespace pocforge::refiner
