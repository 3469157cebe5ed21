#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "pocforge/exec/executor.hpp"
#include "support.hpp"

using namespace pocforge;
using exec::Language;
using exec::PoCArtifact;
using exec::SandboxSpec;
using llm::Gateway;
using llm::ScriptedBackend;
using testsupport::TempDir;

namespace {

Gateway gateway_for(std::vector<ScriptedBackend::Entry> entries) {
    return Gateway(std::make_shared<ScriptedBackend>(std::move(entries)));
}

planner::ExploitationPlan minimal_plan() {
    planner::ExploitationPlan plan;
    plan.plan_id = "plan-test";
    plan.insight.vulnerability_type = "Command Injection";
    plan.steps = {{"run", "script_runner"}};
    plan.oracle_config.success_markers = planner::default_success_markers();
    return plan;
}

PoCArtifact js_artifact(const std::string& source) {
    PoCArtifact a;
    a.artifact_id = "poc-test";
    a.language = Language::javascript;
    a.source = source;
    a.success_markers = {"POC_SUCCESS"};
    return a;
}

SandboxSpec local_sandbox(const std::filesystem::path& dir, int timeout = 20) {
    SandboxSpec s;
    s.backend = planner::ExecutorBackend::local_process;
    s.working_dir = dir;
    s.timeout_secs = timeout;
    return s;
}

}  // namespace

TEST_CASE("language detection feature table") {
    CHECK(exec::detect_language("const x = require('set-in');") == Language::javascript);
    CHECK(exec::detect_language("module.exports = function () {};") ==
          Language::javascript);
    CHECK(exec::detect_language("def exploit():\n    pass\n") == Language::python);
    CHECK(exec::detect_language("import os\nprint(os.getcwd())\n") == Language::python);
    CHECK(exec::detect_language("package main\n\nfunc main() {}\n") == Language::go);
    CHECK(exec::detect_language("#!/bin/sh\nls /\n") == Language::shell);
    CHECK(exec::detect_language("#!/usr/bin/env python3\nx = 1\n") == Language::python);
    CHECK(exec::detect_language("#!/usr/bin/env node\n1;\n") == Language::javascript);
    CHECK(exec::detect_language("just some prose") == Language::unknown);
}

TEST_CASE("default entry commands per language") {
    CHECK(exec::default_entry_command(Language::javascript) ==
          std::vector<std::string>{"node", "poc.js"});
    CHECK(exec::default_entry_command(Language::python) ==
          std::vector<std::string>{"python3", "poc.py"});
    CHECK(exec::default_entry_command(Language::go) ==
          std::vector<std::string>{"go", "run", "poc.go"});
    CHECK(exec::default_entry_command(Language::shell) ==
          std::vector<std::string>{"sh", "poc.sh"});
}

TEST_CASE("synthesis extracts the fenced block and keeps in-source markers") {
    auto gw = gateway_for(
        {{std::nullopt, testsupport::fenced_js("console.log('POC_SUCCESS');"), {}, false}});
    PoCArtifact artifact = exec::synthesize_poc(minimal_plan(), {}, gw);
    CHECK(artifact.language == Language::javascript);
    CHECK(artifact.source.find("console.log('POC_SUCCESS');") != std::string::npos);
    CHECK(artifact.success_markers == std::vector<std::string>{"POC_SUCCESS"});
    CHECK(artifact.generation == 0);
    CHECK(artifact.artifact_id.rfind("poc-", 0) == 0);
    // No injection happened: the marker was already present exactly once.
    CHECK(artifact.source.find("console.log(\"POC_SUCCESS\")") == std::string::npos);
}

TEST_CASE("synthesis injects a marker print when the code has none") {
    auto gw = gateway_for(
        {{std::nullopt, testsupport::fenced_js("const x = require('fs');"), {}, false}});
    PoCArtifact artifact = exec::synthesize_poc(minimal_plan(), {}, gw);
    REQUIRE(!artifact.success_markers.empty());
    CHECK(artifact.success_markers[0] == "POC_SUCCESS");
    CHECK(artifact.source.find("console.log(\"POC_SUCCESS\");") != std::string::npos);
}

TEST_CASE("markers recorded on the artifact always appear in its source") {
    for (const std::string code :
         {"console.log('POC_SUCCESS');", "const x = 1;", "print('EXPLOIT_SUCCESS')"}) {
        auto gw = gateway_for({{std::nullopt, testsupport::fenced_js(code), {}, false}});
        PoCArtifact artifact = exec::synthesize_poc(minimal_plan(), {}, gw);
        for (const auto& marker : artifact.success_markers)
            CHECK(artifact.source.find(marker) != std::string::npos);
    }
}

TEST_CASE("fenceless replies are re-prompted, then rejected") {
    SUBCASE("recovery on second attempt") {
        auto gw = gateway_for(
            {{std::nullopt, "sorry, here is a description instead", {}, false},
             {std::nullopt, testsupport::fenced_js("console.log('POC_SUCCESS');"), {}, false}});
        CHECK_NOTHROW(exec::synthesize_poc(minimal_plan(), {}, gw));
    }
    SUBCASE("persistent prose raises no_code_block") {
        auto gw = gateway_for({{std::nullopt, "still no code", {}, true}});
        try {
            exec::synthesize_poc(minimal_plan(), {}, gw);
            FAIL("expected no_code_block");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::no_code_block);
        }
    }
}

TEST_CASE("ENTRY directive overrides the launch command") {
    auto gw = gateway_for(
        {{std::nullopt,
          testsupport::fenced_js("console.log('POC_SUCCESS');") + "\nENTRY: node poc.js --fast",
          {}, false}});
    PoCArtifact artifact = exec::synthesize_poc(minimal_plan(), {}, gw);
    CHECK(artifact.entry_command ==
          std::vector<std::string>{"node", "poc.js", "--fast"});
}

TEST_CASE("backend selection: override beats plan beats default") {
    planner::ExploitationPlan plan = minimal_plan();
    plan.chosen_executor = planner::ExecutorBackend::container;
    CHECK(exec::select_backend(plan, std::nullopt).backend ==
          planner::ExecutorBackend::container);
    CHECK(exec::select_backend(plan, planner::ExecutorBackend::local_process).backend ==
          planner::ExecutorBackend::local_process);
    plan.chosen_executor = planner::ExecutorBackend::local_process;
    CHECK(exec::select_backend(plan, std::nullopt).backend ==
          planner::ExecutorBackend::local_process);
}

TEST_CASE("local execution captures stdout and exit code") {
    TempDir tmp;
    auto result = exec::execute(js_artifact("console.log('POC_SUCCESS');"),
                                local_sandbox(tmp / "work"));
    REQUIRE(result.exit_code.has_value());
    CHECK(*result.exit_code == 0);
    CHECK(!result.timed_out);
    CHECK(result.stdout_text.find("POC_SUCCESS") != std::string::npos);
    CHECK(result.backend_used == planner::ExecutorBackend::local_process);
    CHECK(result.artifact_id == "poc-test");
}

TEST_CASE("missing module surfaces on stderr with nonzero exit") {
    TempDir tmp;
    auto result = exec::execute(js_artifact("require('missing-module-zzz');"),
                                local_sandbox(tmp / "work"));
    REQUIRE(result.exit_code.has_value());
    CHECK(*result.exit_code != 0);
    CHECK(result.stderr_text.find("Cannot find module") != std::string::npos);
}

TEST_CASE("timeout kills the process group within the grace budget") {
    TempDir tmp;
    auto result = exec::execute(js_artifact("setTimeout(function () {}, 60000);"),
                                local_sandbox(tmp / "work", 1));
    CHECK(result.timed_out);
    CHECK(!result.exit_code.has_value());
    CHECK(result.duration_ms <= 1000 + exec::kTimeoutGraceMs + 2000);
}

TEST_CASE("artifact runs inside the working directory jail") {
    TempDir tmp;
    auto result = exec::execute(
        js_artifact("require('fs').writeFileSync('dropped.txt', 'x');\n"
                    "console.log(process.cwd());"),
        local_sandbox(tmp / "work"));
    REQUIRE(result.exit_code.has_value());
    CHECK(*result.exit_code == 0);
    CHECK(std::filesystem::exists(tmp.path() / "work" / "dropped.txt"));
    CHECK(result.stdout_text.find((tmp.path() / "work").string()) != std::string::npos);
}

TEST_CASE("environment is sanitized but sandbox env vars pass through") {
    TempDir tmp;
    ::setenv("POCFORGE_SECRET_CANARY", "leak-me", 1);
    SandboxSpec sandbox = local_sandbox(tmp / "work");
    sandbox.env["TARGET_REPO"] = "/tmp/target";
    auto result = exec::execute(
        js_artifact("console.log('S=' + (process.env.POCFORGE_SECRET_CANARY || 'unset'));\n"
                    "console.log('T=' + process.env.TARGET_REPO);"),
        sandbox);
    ::unsetenv("POCFORGE_SECRET_CANARY");
    CHECK(result.stdout_text.find("S=unset") != std::string::npos);
    CHECK(result.stdout_text.find("T=/tmp/target") != std::string::npos);
}

TEST_CASE("outbound connection attempts from the sandbox observably fail") {
    TempDir tmp;
    auto result = exec::execute(
        js_artifact("const net = require('net');\n"
                    "const s = net.connect(9, '192.0.2.1');\n"
                    "s.setTimeout(500, function () { s.destroy(); });\n"
                    "s.on('error', function () { console.log('connect-blocked'); });\n"
                    "s.on('timeout', function () { console.log('connect-blocked'); });\n"
                    "s.on('connect', function () { console.log('connect-open'); });"),
        local_sandbox(tmp / "work", 5));
    CHECK(result.stdout_text.find("connect-open") == std::string::npos);
}

TEST_CASE("container backend without a runtime reports backend_unavailable") {
    // The CI sandbox has no docker/podman on PATH; the container path must
    // fail loudly rather than fall back silently.
    TempDir tmp;
    SandboxSpec sandbox = local_sandbox(tmp / "work");
    sandbox.backend = planner::ExecutorBackend::container;
    sandbox.image = "node:20";
    try {
        exec::execute(js_artifact("console.log(1);"), sandbox);
        WARN("container runtime present; skipping unavailable-path check");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::backend_unavailable);
    }
}

TEST_CASE("empty artifact source is a setup failure") {
    TempDir tmp;
    try {
        exec::execute(js_artifact(""), local_sandbox(tmp / "work"));
        FAIL("expected sandbox_setup_failure");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::sandbox_setup_failure);
    }
}
