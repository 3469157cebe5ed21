#include <fstream>

#include "pocforge/engine/orchestrator.hpp"

namespace pocforge::engine {

using nlohmann::json;

const char* run_status_name(RunStatus status) {
    switch (status) {
        case RunStatus::exploited: return "exploited";
        case RunStatus::budget_exhausted: return "budget_exhausted";
        case RunStatus::timeout: return "timeout";
        case RunStatus::fatal_error: return "fatal_error";
    }
    return "fatal_error";
}

void to_json(json& j, const TraceEntry& e) {
    j = {{"iteration", e.iteration},
         {"state_tag", e.state_tag},
         {"tactical_score", e.tactical_score},
         {"strategic_score", e.strategic_score},
         {"feedback", e.feedback},
         {"improvement_hints", e.improvement_hints},
         {"route", refiner::route_name(e.route)},
         {"fallback_triggered", e.fallback_triggered}};
}

void from_json(const json& j, TraceEntry& e) {
    e.iteration = j.at("iteration").get<int>();
    e.state_tag = j.value("state_tag", "");
    e.tactical_score = j.value("tactical_score", 0.0);
    e.strategic_score = j.value("strategic_score", 0.0);
    e.feedback = j.value("feedback", "");
    e.improvement_hints = j.value("improvement_hints", std::vector<std::string>{});
    e.route = refiner::route_from_name(j.value("route", "replan"));
    e.fallback_triggered = j.value("fallback_triggered", false);
}

void write_trace(const RunOutcome& outcome, const std::filesystem::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::store_io_error, "cannot write trace: " + path.string());
    for (const auto& entry : outcome.trace) out << json(entry).dump() << '\n';
    // Wall-clock duration stays out of the footer so identical runs produce
    // byte-identical traces; it is reported in the outcome summary instead.
    json footer = {{"footer", true},
                   {"status", run_status_name(outcome.status)},
                   {"iterations", outcome.iterations},
                   {"total_tokens", outcome.total_tokens}};
    out << footer.dump() << '\n';
    if (!out) throw Error(ErrorCode::store_io_error, "trace write failed: " + path.string());
}

TraceFile read_trace(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::store_io_error, "cannot open trace: " + path.string());
    TraceFile file;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json doc = json::parse(line, nullptr, false);
        if (doc.is_discarded())
            throw Error(ErrorCode::parse_error,
                        "malformed trace line " + std::to_string(lineno));
        if (doc.value("footer", false))
            file.footer = doc;
        else
            file.entries.push_back(doc.get<TraceEntry>());
    }
    return file;
}

}  // namespace pocforge::engine
