#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <sys/wait.h>

#include "support.hpp"

using namespace pocforge;
using testsupport::TempDir;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(POCFORGE_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CliResult result;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe))
        result.output.append(buf, n);
    const int status = ::pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::filesystem::path write_report(const TempDir& tmp) {
    const auto path = tmp / "report.json";
    testsupport::write_file(path, nlohmann::json(testsupport::set_in_report()).dump(2));
    return path;
}

}  // namespace

TEST_CASE("reproduce: scripted golden run exits 0 and writes the artifact set") {
    TempDir tmp;
    const auto script = testsupport::write_script(testsupport::golden_script_entries(),
                                                  tmp / "script.json");
    const auto out = tmp / "out";
    CliResult r = run_cli("reproduce --report " + write_report(tmp).string() +
                          " --backend scripted:" + script.string() + " --out " +
                          out.string());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("\"status\": \"exploited\"") != std::string::npos);
    CHECK(r.output.find("\"iterations\": 5") != std::string::npos);

    CHECK(std::filesystem::exists(out / "trace.jsonl"));
    CHECK(std::filesystem::exists(out / "poc.js"));
    CHECK(std::filesystem::exists(out / "outcome.json"));

    nlohmann::json summary =
        nlohmann::json::parse(testsupport::read_file(out / "outcome.json"));
    CHECK(summary["status"] == "exploited");
    CHECK(summary["iterations"] == 5);
    CHECK(summary["total_tokens"] == testsupport::golden_script_tokens());
    CHECK(summary.contains("duration_ms"));
    CHECK(!summary.contains("error_detail"));

    const std::string poc = testsupport::read_file(out / "poc.js");
    CHECK(poc.find("['__proto__', 'polluted']") != std::string::npos);

    engine::TraceFile trace = engine::read_trace(out / "trace.jsonl");
    CHECK(trace.entries.size() == 5);
    CHECK(trace.footer["total_tokens"] == testsupport::golden_script_tokens());
}

TEST_CASE("reproduce: a failing run exits 3 but still writes the trace") {
    TempDir tmp;
    const auto script = testsupport::write_script(
        testsupport::exhaustion_script_entries(), tmp / "script.json");
    const auto out = tmp / "out";
    CliResult r = run_cli("reproduce --report " + write_report(tmp).string() +
                          " --backend scripted:" + script.string() + " --out " +
                          out.string() + " --max-strategic 2 --max-tactical 2");
    CAPTURE(r.output);
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("\"status\": \"budget_exhausted\"") != std::string::npos);
    CHECK(std::filesystem::exists(out / "trace.jsonl"));
    CHECK(!std::filesystem::exists(out / "poc.js"));
    engine::TraceFile trace = engine::read_trace(out / "trace.jsonl");
    CHECK(trace.entries.size() == 4);  // 2 cycles x 2 iterations
}

TEST_CASE("reproduce: configuration problems exit 2") {
    TempDir tmp;

    SUBCASE("missing report file") {
        CliResult r = run_cli("reproduce --report /no/such/report.json");
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("config error") != std::string::npos);
    }
    SUBCASE("malformed report JSON") {
        const auto path = tmp / "broken.json";
        testsupport::write_file(path, "{not json");
        CliResult r = run_cli("reproduce --report " + path.string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("report referencing a missing repo") {
        const auto path = tmp / "report.json";
        nlohmann::json doc = nlohmann::json(testsupport::set_in_report());
        doc["repo_path"] = "/no/such/repo";
        testsupport::write_file(path, doc.dump());
        CliResult r = run_cli("reproduce --report " + path.string());
        CHECK(r.exit_code == 2);
    }
    SUBCASE("unknown backend flag") {
        CliResult r = run_cli("reproduce --report " + write_report(tmp).string() +
                              " --backend carrier-pigeon");
        CHECK(r.exit_code == 2);
    }
    SUBCASE("missing required option") {
        CliResult r = run_cli("reproduce");
        CHECK(r.exit_code != 0);
    }
}

TEST_CASE("bench: dataset run writes report.json and exits 0") {
    TempDir tmp;
    const auto script = testsupport::write_script(testsupport::bench_script_entries(),
                                                  tmp / "script.json");
    std::string dataset_text;
    dataset_text += nlohmann::json{{"cve_id", "CLI-0001"},
                                   {"description", "GOOD-ENTRY cli bench entry"},
                                   {"repo_path", testsupport::repo("cmdi").string()}}
                        .dump() +
                    "\n";
    dataset_text += nlohmann::json{{"cve_id", "CLI-0002"},
                                   {"description", "BAD-ENTRY cli bench entry"},
                                   {"repo_path", testsupport::repo("traversal").string()}}
                        .dump() +
                    "\n";
    const auto dataset = tmp / "dataset.jsonl";
    testsupport::write_file(dataset, dataset_text);

    const auto cfg_path = tmp / "config.json";
    testsupport::write_file(cfg_path,
                            nlohmann::json{{"budget",
                                            {{"max_strategic_cycles", 1},
                                             {"max_tactical_iterations_per_cycle", 2}}}}
                                .dump());

    const auto out = tmp / "bench-out";
    CliResult r = run_cli("bench --dataset " + dataset.string() + " --config " +
                          cfg_path.string() + " --backend scripted:" + script.string() +
                          " --out " + out.string());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("RSR 50.0%") != std::string::npos);

    nlohmann::json report =
        nlohmann::json::parse(testsupport::read_file(out / "report.json"));
    CHECK(report["total"] == 2);
    CHECK(report["successes"] == 1);
    CHECK(report["per_entry"][0]["cve_id"] == "CLI-0001");
}

TEST_CASE("bench: --ablate-memory emits the paired report") {
    TempDir tmp;
    const auto script = testsupport::write_script(testsupport::control_script_entries(),
                                                  tmp / "script.json");
    const auto dataset = tmp / "dataset.jsonl";
    testsupport::write_file(
        dataset, nlohmann::json{{"cve_id", "CLI-0003"},
                                {"description", "control entry for the cli ablation"},
                                {"repo_path", testsupport::repo("cmdi").string()}}
                         .dump() +
                     "\n");
    const auto out = tmp / "ablate-out";
    CliResult r = run_cli("bench --dataset " + dataset.string() +
                          " --backend scripted:" + script.string() +
                          " --ablate-memory --out " + out.string());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("w/o experience indexing") != std::string::npos);
    nlohmann::json report =
        nlohmann::json::parse(testsupport::read_file(out / "report.json"));
    CHECK(report.contains("with_indexing"));
    CHECK(report.contains("without_indexing"));
    CHECK(report["delta"]["tokens"] == 0);
}

TEST_CASE("bench: missing dataset exits 2") {
    CliResult r = run_cli("bench --dataset /no/such/dataset.jsonl");
    CHECK(r.exit_code == 2);
}

TEST_CASE("replay renders a written trace and its footer") {
    TempDir tmp;
    const auto script = testsupport::write_script(testsupport::golden_script_entries(),
                                                  tmp / "script.json");
    const auto out = tmp / "out";
    CliResult repro = run_cli("reproduce --report " + write_report(tmp).string() +
                              " --backend scripted:" + script.string() + " --out " +
                              out.string());
    REQUIRE(repro.exit_code == 0);

    CliResult r = run_cli("replay " + (out / "trace.jsonl").string());
    CAPTURE(r.output);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("partial_exec") != std::string::npos);
    CHECK(r.output.find("module_error") != std::string::npos);
    CHECK(r.output.find("exploited") != std::string::npos);
    CHECK(r.output.find("(fallback)") != std::string::npos);
    CHECK(r.output.find("status=exploited iterations=5 total_tokens=2040") !=
          std::string::npos);
}

TEST_CASE("replay rejects missing or corrupt traces with exit 4") {
    TempDir tmp;
    SUBCASE("missing file") {
        CliResult r = run_cli("replay /no/such/trace.jsonl");
        CHECK(r.exit_code == 4);
        CHECK(r.output.find("trace error") != std::string::npos);
    }
    SUBCASE("corrupt line") {
        const auto path = tmp / "trace.jsonl";
        testsupport::write_file(path, "garbage line\n");
        CliResult r = run_cli("replay " + path.string());
        CHECK(r.exit_code == 4);
        CHECK(r.output.find("line 1") != std::string::npos);
    }
}

TEST_CASE("tools lists the default registry with backends") {
    CliResult r = run_cli("tools");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("node_function_call") != std::string::npos);
    CHECK(r.output.find("script_runner") != std::string::npos);
    CHECK(r.output.find("container_script_runner") != std::string::npos);
    CHECK(r.output.find("http_request_sender") != std::string::npos);
    CHECK(r.output.find("[local_process]") != std::string::npos);
    CHECK(r.output.find("[container]") != std::string::npos);
}
