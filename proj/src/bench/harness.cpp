#include "pocforge/bench/harness.hpp"

#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace pocforge::bench {

namespace fs = std::filesystem;
using nlohmann::json;

planner::VulnerabilityReport BenchmarkEntry::to_report() const {
    planner::VulnerabilityReport report;
    report.cve_id = cve_id;
    report.description = description;
    report.package = package;
    report.version = version;
    report.repo_path = repo_path;
    report.patched_path = patched_path;
    return report;
}

std::vector<BenchmarkEntry> load_dataset(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::store_io_error, "cannot open dataset: " + path.string());
    std::vector<BenchmarkEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded())
            throw Error(ErrorCode::parse_error,
                        "malformed dataset line " + std::to_string(lineno));
        BenchmarkEntry entry;
        try {
            entry.cve_id = doc.value("cve_id", "");
            entry.description = doc.at("description").get<std::string>();
            entry.package = doc.value("package", "");
            entry.version = doc.value("version", "");
            entry.repo_path = doc.at("repo_path").get<std::string>();
            if (doc.contains("patched_path"))
                entry.patched_path = doc["patched_path"].get<std::string>();
            if (doc.contains("oracle_config"))
                entry.oracle_config = doc["oracle_config"].get<oracle::OracleConfig>();
            if (doc.contains("ground_truth_payload"))
                entry.ground_truth_payload = doc["ground_truth_payload"].get<std::string>();
        } catch (const json::exception& e) {
            throw Error(ErrorCode::parse_error, "invalid entry at line " +
                                                    std::to_string(lineno) + ": " + e.what());
        }
        if (entry.description.empty())
            throw Error(ErrorCode::parse_error,
                        "entry missing description at line " + std::to_string(lineno));
        if (!fs::is_directory(entry.repo_path))
            throw Error(ErrorCode::missing_repo,
                        "repo does not exist: " + entry.repo_path.string());
        entries.push_back(std::move(entry));
    }
    return entries;
}

BenchmarkReport run_benchmark(const std::vector<BenchmarkEntry>& entries,
                              const engine::EngineConfig& config, int parallelism) {
    if (entries.empty())
        throw Error(ErrorCode::config_error, "benchmark needs at least one entry");
    parallelism = std::max(1, parallelism);

    std::vector<EntryResult> results(entries.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= entries.size()) return;
            engine::EngineConfig run_config = config;
            if (!config.out_dir.empty())
                run_config.out_dir = config.out_dir / entries[i].cve_id;
            else
                run_config.out_dir.clear();
            engine::Engine eng(run_config);
            engine::RunOutcome outcome =
                eng.run(entries[i].to_report(), entries[i].oracle_config);
            if (!run_config.out_dir.empty())
                engine::write_trace(outcome, run_config.out_dir / "trace.jsonl");
            results[i] = {entries[i].cve_id, outcome.status, outcome.iterations,
                          outcome.total_tokens, outcome.duration_ms};
        }
    };

    if (parallelism == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (int t = 0; t < parallelism; ++t) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
    }

    BenchmarkReport report;
    report.total = static_cast<int>(results.size());
    for (const auto& r : results) {
        if (r.status == engine::RunStatus::exploited) ++report.successes;
        report.total_tokens += r.tokens;
        report.avg_iterations += static_cast<double>(r.iterations);
        report.avg_time_ms += static_cast<double>(r.duration_ms);
    }
    report.rsr = 100.0 * report.successes / report.total;
    report.avg_iterations /= report.total;
    report.avg_time_ms /= report.total;
    report.per_entry = std::move(results);
    return report;
}

AblationReport compare_with_memory_disabled(const std::vector<BenchmarkEntry>& entries,
                                            const engine::EngineConfig& config) {
    engine::EngineConfig enabled = config;
    enabled.experience_enabled = true;
    if (!config.out_dir.empty()) enabled.out_dir = config.out_dir / "with_indexing";
    engine::EngineConfig disabled = config;
    disabled.experience_enabled = false;
    if (!config.out_dir.empty()) disabled.out_dir = config.out_dir / "without_indexing";

    AblationReport report;
    report.with_indexing = run_benchmark(entries, enabled, 1);
    report.without_indexing = run_benchmark(entries, disabled, 1);
    return report;
}

json BenchmarkReport::to_json() const {
    json per = json::array();
    for (const auto& r : per_entry)
        per.push_back({{"cve_id", r.cve_id},
                       {"status", engine::run_status_name(r.status)},
                       {"iterations", r.iterations},
                       {"tokens", r.tokens},
                       {"duration_ms", r.duration_ms}});
    return {{"total", total},         {"successes", successes},
            {"rsr", rsr},             {"total_tokens", total_tokens},
            {"avg_iterations", avg_iterations}, {"avg_time_ms", avg_time_ms},
            {"per_entry", per}};
}

std::string BenchmarkReport::to_table() const {
    std::ostringstream out;
    out << std::left << std::setw(20) << "CVE" << std::setw(18) << "Status"
        << std::setw(8) << "Iters" << std::setw(10) << "Tokens" << "Time(ms)\n";
    for (const auto& r : per_entry)
        out << std::left << std::setw(20) << r.cve_id << std::setw(18)
            << engine::run_status_name(r.status) << std::setw(8) << r.iterations
            << std::setw(10) << r.tokens << r.duration_ms << "\n";
    out << "RSR " << std::fixed << std::setprecision(1) << rsr << "%  tokens "
        << total_tokens << "  avg iters " << std::setprecision(2) << avg_iterations
        << "  avg time " << std::setprecision(0) << avg_time_ms << " ms\n";
    return out.str();
}

json AblationReport::to_json() const {
    auto arm = [](const BenchmarkReport& r) {
        return json{{"rsr", r.rsr},
                    {"tokens", r.total_tokens},
                    {"avg_iterations", r.avg_iterations},
                    {"avg_time_ms", r.avg_time_ms}};
    };
    return {{"with_indexing", arm(with_indexing)},
            {"without_indexing", arm(without_indexing)},
            {"delta",
             {{"rsr", with_indexing.rsr - without_indexing.rsr},
              {"tokens", with_indexing.total_tokens - without_indexing.total_tokens},
              {"avg_iterations",
               with_indexing.avg_iterations - without_indexing.avg_iterations},
              {"avg_time_ms", with_indexing.avg_time_ms - without_indexing.avg_time_ms}}}};
}

std::string AblationReport::to_table() const {
    std::ostringstream out;
    out << std::left << std::setw(26) << "Configuration" << std::setw(10) << "RSR(%)"
        << std::setw(12) << "Tokens" << std::setw(12) << "Avg Iters" << "Avg Time(ms)\n";
    auto row = [&](const char* name, const BenchmarkReport& r) {
        out << std::left << std::setw(26) << name << std::setw(10) << std::fixed
            << std::setprecision(1) << r.rsr << std::setw(12) << r.total_tokens
            << std::setw(12) << std::setprecision(2) << r.avg_iterations
            << std::setprecision(0) << r.avg_time_ms << "\n";
    };
    row("full", with_indexing);
    row("w/o experience indexing", without_indexing);
    return out.str();
}

}  // namespace pocforge::bench
