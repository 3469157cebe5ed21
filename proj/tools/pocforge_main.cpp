#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "pocforge/bench/harness.hpp"
#include "pocforge/engine/orchestrator.hpp"

namespace {

using namespace pocforge;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNotExploited = 3;
constexpr int kExitIo = 4;

engine::EngineConfig load_config(const std::string& config_path) {
    if (config_path.empty()) return engine::EngineConfig{};
    return engine::EngineConfig::from_file(config_path);
}

void apply_backend_flag(engine::EngineConfig& config, const std::string& flag) {
    if (flag.empty()) return;
    if (flag == "live") {
        config.backend.kind = engine::BackendConfig::Kind::live;
    } else if (flag.rfind("scripted:", 0) == 0) {
        config.backend.kind = engine::BackendConfig::Kind::scripted;
        config.backend.script_path = flag.substr(9);
    } else if (flag.rfind("replay:", 0) == 0) {
        config.backend.kind = engine::BackendConfig::Kind::replay;
        config.backend.replay_store = flag.substr(7);
    } else {
        throw Error(ErrorCode::config_error, "unknown backend flag: " + flag);
    }
}

planner::VulnerabilityReport load_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::config_error, "cannot open report: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::config_error, "malformed report JSON: " + path);
    return doc.get<planner::VulnerabilityReport>();
}

int run_reproduce(const std::string& report_path, const std::string& config_path,
                  const std::string& out_dir, const std::string& backend_flag,
                  int timeout, int max_strategic, int max_tactical) {
    engine::EngineConfig config;
    planner::VulnerabilityReport report;
    try {
        config = load_config(config_path);
        apply_backend_flag(config, backend_flag);
        if (timeout > 0) config.budget.wall_clock_secs = timeout;
        if (max_strategic > 0) config.budget.max_strategic_cycles = max_strategic;
        if (max_tactical > 0) config.budget.max_tactical_iterations_per_cycle = max_tactical;
        config.out_dir = out_dir;
        report = load_report(report_path);
        report.validate();
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        engine::Engine eng(config);
        engine::RunOutcome outcome = eng.run(report);

        engine::write_trace(outcome, config.out_dir / "trace.jsonl");
        if (outcome.final_artifact) {
            const auto ext = exec::language_extension(outcome.final_artifact->language);
            std::ofstream poc(config.out_dir / (std::string("poc.") + ext));
            poc << outcome.final_artifact->source;
        }
        nlohmann::json summary = {
            {"status", engine::run_status_name(outcome.status)},
            {"iterations", outcome.iterations},
            {"total_tokens", outcome.total_tokens},
            {"duration_ms", outcome.duration_ms}};
        if (!outcome.error_detail.empty()) summary["error_detail"] = outcome.error_detail;
        std::ofstream out(config.out_dir / "outcome.json");
        out << summary.dump(2) << "\n";

        std::cout << summary.dump(2) << "\n";
        return outcome.status == engine::RunStatus::exploited ? kExitOk : kExitNotExploited;
    } catch (const Error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    }
}

int run_bench(const std::string& dataset_path, const std::string& config_path,
              const std::string& out_dir, const std::string& backend_flag, int parallel,
              bool ablate_memory) {
    engine::EngineConfig config;
    std::vector<bench::BenchmarkEntry> entries;
    try {
        config = load_config(config_path);
        apply_backend_flag(config, backend_flag);
        config.out_dir = out_dir;
        entries = bench::load_dataset(dataset_path);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        std::filesystem::create_directories(out_dir);
        if (ablate_memory) {
            bench::AblationReport report = bench::compare_with_memory_disabled(entries, config);
            std::cout << report.to_table();
            std::ofstream out(std::filesystem::path(out_dir) / "report.json");
            out << report.to_json().dump(2) << "\n";
        } else {
            bench::BenchmarkReport report = bench::run_benchmark(entries, config, parallel);
            std::cout << report.to_table();
            std::ofstream out(std::filesystem::path(out_dir) / "report.json");
            out << report.to_json().dump(2) << "\n";
        }
        return kExitOk;
    } catch (const Error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    }
}

int run_replay(const std::string& trace_path) {
    engine::TraceFile trace;
    try {
        trace = engine::read_trace(trace_path);
    } catch (const Error& e) {
        std::cerr << "trace error: " << e.what() << "\n";
        return kExitIo;
    }
    std::cout << std::left << std::setw(6) << "Iter" << std::setw(14) << "State"
              << std::setw(7) << "Tac." << std::setw(7) << "Str." << std::setw(44)
              << "Feedback" << std::setw(40) << "Improvement Hints" << "Route\n";
    for (const auto& e : trace.entries) {
        std::string hints;
        for (const auto& h : e.improvement_hints) {
            if (!hints.empty()) hints += "; ";
            hints += h;
        }
        std::cout << std::left << std::setw(6) << e.iteration << std::setw(14)
                  << e.state_tag << std::setw(7) << e.tactical_score << std::setw(7)
                  << e.strategic_score << std::setw(44) << e.feedback.substr(0, 42)
                  << std::setw(40) << hints.substr(0, 38) << refiner::route_name(e.route)
                  << (e.fallback_triggered ? " (fallback)" : "") << "\n";
    }
    if (!trace.footer.is_null())
        std::cout << "status=" << trace.footer.value("status", "?")
                  << " iterations=" << trace.footer.value("iterations", 0)
                  << " total_tokens=" << trace.footer.value("total_tokens", 0) << "\n";
    return kExitOk;
}

int run_tools() {
    for (const auto& tool : planner::ToolRegistry::with_default_tools().list_tools())
        std::cout << tool.tool_id << " ["
                  << planner::executor_backend_name(tool.executor_backend)
                  << "]: " << tool.capability_description << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CVE-to-PoC reproduction engine"};
    app.require_subcommand(1);

    std::string report_path, config_path, out_dir = "out", backend_flag, dataset_path,
                trace_path;
    int timeout = 0, max_strategic = 0, max_tactical = 0, parallel = 1;
    bool ablate_memory = false;

    auto* reproduce = app.add_subcommand("reproduce", "Reproduce a single CVE");
    reproduce->add_option("--report", report_path, "Vulnerability report JSON")->required();
    reproduce->add_option("--config", config_path, "Engine config JSON");
    reproduce->add_option("--out", out_dir, "Output directory");
    reproduce->add_option("--backend", backend_flag, "live | scripted:<path> | replay:<path>");
    reproduce->add_option("--timeout", timeout, "Wall clock budget (s)");
    reproduce->add_option("--max-strategic", max_strategic, "Strategic cycle budget");
    reproduce->add_option("--max-tactical", max_tactical, "Tactical iterations per cycle");

    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark dataset");
    bench_cmd->add_option("--dataset", dataset_path, "JSONL dataset")->required();
    bench_cmd->add_option("--config", config_path, "Engine config JSON");
    bench_cmd->add_option("--out", out_dir, "Output directory");
    bench_cmd->add_option("--backend", backend_flag, "live | scripted:<path> | replay:<path>");
    bench_cmd->add_option("--parallel", parallel, "Concurrent entries");
    bench_cmd->add_flag("--ablate-memory", ablate_memory, "Paired run without experience indexing");

    auto* replay = app.add_subcommand("replay", "Render a trace file");
    replay->add_option("trace", trace_path, "trace.jsonl path")->required();

    app.add_subcommand("tools", "List the default tool registry");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand("reproduce"))
        return run_reproduce(report_path, config_path, out_dir, backend_flag, timeout,
                             max_strategic, max_tactical);
    if (app.got_subcommand("bench"))
        return run_bench(dataset_path, config_path, out_dir, backend_flag, parallel,
                         ablate_memory);
    if (app.got_subcommand("replay")) return run_replay(trace_path);
    return run_tools();
}
