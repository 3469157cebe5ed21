#include "pocforge/engine/orchestrator.hpp"

#include <chrono>
#include <random>
#include <sstream>

namespace pocforge::engine {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

fs::path unique_run_dir() {
    static std::mt19937_64 rng(std::random_device{}());
    std::ostringstream name;
    name << "pocforge-run-" << std::hex << rng();
    fs::path dir = fs::temp_directory_path() / name.str();
    fs::create_directories(dir);
    return dir;
}

planner::ExecutorBackend effective_backend(const RunState& state) {
    if (state.executor_override) return *state.executor_override;
    if (state.current_plan) return state.current_plan->chosen_executor;
    return planner::ExecutorBackend::local_process;
}

}  // namespace

RunState apply_fallback(RunState state) {
    if (state.fallback_used) return state;  // applies at most once per run
    const auto current = effective_backend(state);
    state.executor_override = current == planner::ExecutorBackend::container
                                  ? planner::ExecutorBackend::local_process
                                  : planner::ExecutorBackend::container;
    state.consecutive_replans = 0;
    state.fallback_used = true;
    return state;
}

Engine::Engine(EngineConfig config, planner::ToolRegistry registry)
    : config_(std::move(config)), registry_(std::move(registry)) {}

RunOutcome Engine::run(const planner::VulnerabilityReport& report) {
    return run(report, std::nullopt);
}

RunOutcome Engine::run(const planner::VulnerabilityReport& report,
                       const std::optional<oracle::OracleConfig>& oracle_override) {
    const auto start = Clock::now();
    RunOutcome outcome;
    const std::string run_id = report.cve_id.empty() ? "run" : report.cve_id;

    const fs::path run_dir = config_.out_dir.empty() ? unique_run_dir() : config_.out_dir;
    std::error_code ec;
    fs::create_directories(run_dir, ec);

    auto elapsed_ms = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start)
            .count();
    };
    auto remaining_secs = [&]() -> std::int64_t {
        return static_cast<std::int64_t>(config_.budget.wall_clock_secs) -
               elapsed_ms() / 1000;
    };

    try {
        llm::Gateway gateway(config_.make_backend(), llm::SchemaRegistry::with_defaults(),
                             config_.run_token_budget);
        refiner::RewardStore store(run_dir / "rewards.jsonl",
                                   config_.reward.cache_capacity);
        oracle::OracleEngine oracle_engine;

        int global_iteration = 0;

        auto finish = [&](RunStatus status) {
            outcome.status = status;
            outcome.iterations = global_iteration;
            outcome.total_tokens = gateway.total_tokens();
            outcome.duration_ms = elapsed_ms();
            return outcome;
        };

        planner::VulnerabilityInsight insight;
        std::vector<planner::CodeEvidence> evidence;
        try {
            insight = planner::extract_insight(report, gateway).insight;
            planner::BuiltinScanner scanner;
            evidence = planner::analyze_code(report, insight, scanner);
        } catch (const Error& e) {
            outcome.error_detail = std::string(error_code_name(e.code())) + ": " + e.what();
            return finish(RunStatus::fatal_error);
        }

        RunState state;
        std::vector<refiner::RewardRecord> history;
        int resynth_count = 0;
        const int max_total_iterations = config_.budget.max_strategic_cycles *
                                         config_.budget.max_tactical_iterations_per_cycle;

        for (state.strategic_cycle = 0;
             state.strategic_cycle < config_.budget.max_strategic_cycles;
             ++state.strategic_cycle) {
            if (remaining_secs() <= 0) return finish(RunStatus::timeout);

            state.phase = Phase::planning;
            planner::PlanningContext context;
            if (state.strategic_cycle > 0 && config_.experience_enabled) {
                // Two-phase retrieval: K most recent plus same-error records.
                for (const auto& rec : store.retrieve_recent(config_.reward.k_recent))
                    context.experience_summaries.push_back(rec.summary());
                if (!history.empty() && history.back().error_type) {
                    int taken = 0;
                    for (const auto& rec :
                         store.retrieve_by_error(*history.back().error_type)) {
                        if (taken++ >= config_.reward.k_error) break;
                        context.experience_summaries.push_back(rec.summary());
                    }
                }
            }

            planner::ExploitationPlan plan;
            try {
                plan = planner::generate_plan(insight, evidence, registry_, gateway, context);
            } catch (const Error& e) {
                outcome.error_detail =
                    std::string(error_code_name(e.code())) + ": " + e.what();
                return finish(RunStatus::fatal_error);
            }
            if (oracle_override) {
                plan.oracle_config = *oracle_override;
                if (plan.oracle_config.fatal_patterns.empty())
                    plan.oracle_config.fatal_patterns = oracle::default_fatal_patterns();
            }
            plan.oracle_config.differential_enabled =
                config_.differential_enabled && report.patched_path.has_value();
            state.current_plan = plan;

            refiner::Route pending = refiner::Route::resynthesize;
            bool first_artifact_of_cycle = true;

            for (state.tactical_iteration = 0;
                 state.tactical_iteration < config_.budget.max_tactical_iterations_per_cycle;
                 ++state.tactical_iteration) {
                if (!config_.budget.tactical_reset_per_cycle &&
                    global_iteration >= max_total_iterations)
                    break;
                if (remaining_secs() <= 0) return finish(RunStatus::timeout);

                try {
                    state.phase = Phase::synthesizing;
                    if (!state.current_artifact || pending == refiner::Route::resynthesize) {
                        exec::PoCArtifact artifact =
                            exec::synthesize_poc(plan, evidence, gateway);
                        artifact.generation = first_artifact_of_cycle ? 0 : ++resynth_count;
                        first_artifact_of_cycle = false;
                        state.current_artifact = artifact;
                    } else if (pending == refiner::Route::refine) {
                        state.current_artifact = refiner::refine(
                            *state.current_artifact, history.back(), plan, gateway);
                    }
                } catch (const Error& e) {
                    outcome.error_detail =
                        std::string(error_code_name(e.code())) + ": " + e.what();
                    return finish(RunStatus::fatal_error);
                }

                state.phase = Phase::executing;
                exec::SandboxSpec sandbox =
                    exec::select_backend(plan, state.executor_override,
                                         config_.sandbox_defaults);
                sandbox.working_dir =
                    run_dir / "work" / ("iter_" + std::to_string(global_iteration));
                sandbox.env["TARGET_REPO"] = report.repo_path.string();
                sandbox.timeout_secs = static_cast<int>(std::min<std::int64_t>(
                    sandbox.timeout_secs, std::max<std::int64_t>(1, remaining_secs())));

                exec::ExecutionResult result;
                try {
                    result = exec::execute(*state.current_artifact, sandbox);
                } catch (const Error& e) {
                    // Backend failures become a failed iteration with no exit
                    // code (the PoC never ran); the routing loop is the
                    // recovery mechanism.
                    result.stderr_text = std::string(error_code_name(e.code())) + ": " + e.what();
                    result.exit_code = std::nullopt;
                    result.backend_used = sandbox.backend;
                    result.artifact_id = state.current_artifact->artifact_id;
                }

                state.phase = Phase::verifying;
                oracle::OracleVerdict verdict = oracle_engine.verify(
                    result, plan.oracle_config, insight, gateway);

                state.phase = Phase::shaping;
                refiner::RewardRecord record =
                    refiner::shape_reward(verdict, result, insight, global_iteration,
                                          run_id, gateway, store);

                state.phase = Phase::routing;
                refiner::BudgetState budget_state{
                    state.tactical_iteration,
                    config_.budget.max_tactical_iterations_per_cycle};
                refiner::Route decision = refiner::route(
                    record, history, budget_state, config_.reward.escalation_window);

                bool differential_rejected = false;
                std::string differential_note;
                if (decision == refiner::Route::success &&
                    plan.oracle_config.differential_enabled && report.patched_path) {
                    exec::SandboxSpec vuln_env = sandbox;
                    vuln_env.working_dir =
                        run_dir / "work" / ("diff_vuln_" + std::to_string(global_iteration));
                    exec::SandboxSpec patched_env = sandbox;
                    patched_env.working_dir =
                        run_dir / "work" / ("diff_patch_" + std::to_string(global_iteration));
                    patched_env.env["TARGET_REPO"] = report.patched_path->string();
                    oracle::OracleVerdict diff = oracle_engine.differential_check(
                        *state.current_artifact, vuln_env, patched_env,
                        plan.oracle_config, insight, gateway);
                    if (diff.outcome != oracle::Outcome::confirmed) {
                        differential_rejected = true;
                        differential_note =
                            " differential rejected: " +
                            (diff.evidence.empty() ? "unknown" : diff.evidence.front());
                        decision = refiner::Route::refine;
                        record.oracle_confirmed = false;
                        record.feedback += differential_note;
                        if (record.improvement_hints.empty())
                            record.improvement_hints.push_back(
                                "Make the trigger specific to the vulnerable version.");
                    } else {
                        outcome.final_verdict = diff;
                    }
                }

                TraceEntry entry;
                entry.iteration = global_iteration;
                entry.state_tag = record.state_tag;
                entry.tactical_score = record.tactical_score;
                entry.strategic_score = record.strategic_score;
                entry.feedback = record.feedback;
                entry.improvement_hints = record.improvement_hints;
                entry.route = decision;
                outcome.trace.push_back(entry);

                record.suggested_route = decision;
                history.push_back(record);
                ++global_iteration;

                if (decision == refiner::Route::success) {
                    outcome.final_artifact = state.current_artifact;
                    if (!outcome.final_verdict) outcome.final_verdict = verdict;
                    return finish(RunStatus::exploited);
                }
                (void)differential_rejected;

                if (decision == refiner::Route::replan) {
                    // Tactical decisions in between do not reset the counter:
                    // it tracks consecutive zero-progress replans.
                    if (record.strategic_score <= 0.0)
                        ++state.consecutive_replans;
                    else
                        state.consecutive_replans = 0;
                    break;
                }
                pending = decision;
            }

            if (state.consecutive_replans >= config_.fallback_threshold) {
                if (!state.fallback_used) {
                    state = apply_fallback(state);
                    if (!outcome.trace.empty())
                        outcome.trace.back().fallback_triggered = true;
                } else if (!outcome.trace.empty()) {
                    // Second trigger is a no-op, flagged in the trace.
                    outcome.trace.back().feedback += " [fallback already applied]";
                }
            }
            state.current_artifact.reset();
            if (!config_.budget.tactical_reset_per_cycle &&
                global_iteration >= max_total_iterations)
                break;
        }

        state.phase = Phase::done;
        return finish(remaining_secs() <= 0 ? RunStatus::timeout
                                            : RunStatus::budget_exhausted);
    } catch (const Error& e) {
        outcome.status = RunStatus::fatal_error;
        outcome.error_detail = std::string(error_code_name(e.code())) + ": " + e.what();
        outcome.duration_ms = elapsed_ms();
        return outcome;
    }
}

}  // namespace pocforge::engine
