// Python bindings for the core operations: language/payload helpers, the
// static verification layers, reward routing, and full scripted runs.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pocforge/engine/orchestrator.hpp"

namespace py = pybind11;
using namespace pocforge;
using nlohmann::json;

namespace {

json from_pyjson(const std::string& text, const char* what) {
    json doc = json::parse(text, nullptr, false);
    if (doc.is_discarded())
        throw py::value_error(std::string("malformed JSON for ") + what);
    return doc;
}

py::dict verdict_to_dict(const oracle::OracleVerdict& v) {
    py::dict out;
    out["outcome"] = std::string(oracle::outcome_name(v.outcome));
    out["layer"] = std::string(oracle::layer_name(v.layer));
    out["confidence"] = v.confidence;
    out["evidence"] = v.evidence;
    return out;
}

oracle::OracleConfig config_from_kwargs(const std::vector<std::string>& markers,
                                        const std::vector<std::string>& evidence,
                                        const std::vector<std::string>& fatal,
                                        bool expect_nonzero_exit) {
    oracle::OracleConfig config;
    config.success_markers = markers;
    config.evidence_patterns = evidence;
    config.fatal_patterns = fatal.empty() ? oracle::default_fatal_patterns() : fatal;
    config.expect_nonzero_exit = expect_nonzero_exit;
    return config;
}

exec::ExecutionResult result_from_args(const std::string& stdout_text,
                                       const std::string& stderr_text,
                                       std::optional<int> exit_code, bool timed_out) {
    exec::ExecutionResult result;
    result.stdout_text = stdout_text;
    result.stderr_text = stderr_text;
    result.exit_code = exit_code;
    result.timed_out = timed_out;
    return result;
}

}  // namespace

PYBIND11_MODULE(_pocforge, m) {
    m.doc() = "Native bindings for the PoC reproduction engine";

    m.def("detect_language",
          [](const std::string& source) {
              return std::string(exec::language_name(exec::detect_language(source)));
          },
          py::arg("source"), "Classify a PoC source snippet by language.");

    m.def("default_entry_command",
          [](const std::string& language) {
              return exec::default_entry_command(exec::language_from_name(language));
          },
          py::arg("language"));

    m.def("payload_hint", &planner::payload_hint, py::arg("vulnerability_type"),
          "Canonical payload templates for a vulnerability type.");

    m.def("default_success_markers", &planner::default_success_markers);

    m.def("extract_fenced_block",
          [](const std::string& text) -> std::optional<std::string> {
              return llm::extract_fenced_block(text);
          },
          py::arg("text"));

    m.def("request_digest",
          [](const std::vector<std::pair<std::string, std::string>>& messages,
             double temperature) {
              llm::CompletionRequest req;
              req.temperature = temperature;
              for (const auto& [role, content] : messages)
                  req.messages.push_back(
                      {role == "system" ? llm::Role::system
                       : role == "assistant" ? llm::Role::assistant
                                             : llm::Role::user,
                       content});
              return llm::request_digest(req);
          },
          py::arg("messages"), py::arg("temperature") = 0.1);

    m.def("verify_static",
          [](const std::string& stdout_text, const std::string& stderr_text,
             std::optional<int> exit_code, bool timed_out,
             const std::vector<std::string>& success_markers,
             const std::vector<std::string>& evidence_patterns,
             const std::vector<std::string>& fatal_patterns, bool expect_nonzero_exit) {
              oracle::OracleEngine engine;
              const auto config = config_from_kwargs(success_markers, evidence_patterns,
                                                     fatal_patterns, expect_nonzero_exit);
              const auto result =
                  result_from_args(stdout_text, stderr_text, exit_code, timed_out);
              oracle::OracleVerdict v = engine.verify_l1(result, config);
              if (v.outcome == oracle::Outcome::ambiguous)
                  v = engine.verify_l2(result, config);
              return verdict_to_dict(v);
          },
          py::arg("stdout_text"), py::arg("stderr_text") = "",
          py::arg("exit_code") = std::nullopt, py::arg("timed_out") = false,
          py::arg("success_markers") = std::vector<std::string>{},
          py::arg("evidence_patterns") = std::vector<std::string>{},
          py::arg("fatal_patterns") = std::vector<std::string>{},
          py::arg("expect_nonzero_exit") = false,
          "Run the static verification layers (no judge) over an execution result.");

    m.def("route",
          [](double tactical, double strategic, bool oracle_confirmed,
             int iterations_used, int max_iterations) {
              refiner::RewardRecord record;
              record.tactical_score = tactical;
              record.strategic_score = strategic;
              record.oracle_confirmed = oracle_confirmed;
              return std::string(refiner::route_name(refiner::route(
                  record, {}, refiner::BudgetState{iterations_used, max_iterations})));
          },
          py::arg("tactical"), py::arg("strategic"), py::arg("oracle_confirmed") = false,
          py::arg("iterations_used") = 0, py::arg("max_iterations") = 5,
          "Map a dual-dimension score onto the next loop action.");

    m.def("reproduce",
          [](const std::string& report_json, const std::string& script_path,
             const std::string& out_dir) {
              engine::EngineConfig cfg;
              cfg.backend.kind = engine::BackendConfig::Kind::scripted;
              cfg.backend.script_path = script_path;
              cfg.out_dir = out_dir;
              planner::VulnerabilityReport report =
                  from_pyjson(report_json, "report").get<planner::VulnerabilityReport>();
              report.validate();
              engine::Engine eng(std::move(cfg));
              engine::RunOutcome outcome = eng.run(report);
              engine::write_trace(outcome,
                                  std::filesystem::path(out_dir) / "trace.jsonl");
              py::dict out;
              out["status"] = std::string(engine::run_status_name(outcome.status));
              out["iterations"] = outcome.iterations;
              out["total_tokens"] = outcome.total_tokens;
              out["duration_ms"] = outcome.duration_ms;
              if (!outcome.error_detail.empty()) out["error_detail"] = outcome.error_detail;
              py::list trace;
              for (const auto& entry : outcome.trace)
                  trace.append(json(entry).dump());
              out["trace"] = trace;
              if (outcome.final_artifact) out["poc_source"] = outcome.final_artifact->source;
              return out;
          },
          py::arg("report_json"), py::arg("script_path"), py::arg("out_dir"),
          "Run a full scripted reproduction and return the outcome summary.");

    py::register_exception<Error>(m, "EngineError");
}
