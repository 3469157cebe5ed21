#include "pocforge/exec/executor.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "../common/subprocess.hpp"

namespace pocforge::exec {

namespace fs = std::filesystem;
using llm::CompletionRequest;
using llm::Role;
using nlohmann::json;

const char* language_name(Language lang) {
    switch (lang) {
        case Language::javascript: return "javascript";
        case Language::python: return "python";
        case Language::go: return "go";
        case Language::shell: return "shell";
        case Language::unknown: return "unknown";
    }
    return "unknown";
}

Language language_from_name(const std::string& name) {
    if (name == "javascript" || name == "js" || name == "node") return Language::javascript;
    if (name == "python" || name == "py" || name == "python3") return Language::python;
    if (name == "go" || name == "golang") return Language::go;
    if (name == "shell" || name == "sh" || name == "bash") return Language::shell;
    return Language::unknown;
}

const char* language_extension(Language lang) {
    switch (lang) {
        case Language::javascript: return "js";
        case Language::python: return "py";
        case Language::go: return "go";
        case Language::shell: return "sh";
        case Language::unknown: return "txt";
    }
    return "txt";
}

std::vector<std::string> default_entry_command(Language lang) {
    const std::string file = std::string("poc.") + language_extension(lang);
    switch (lang) {
        case Language::javascript: return {"node", file};
        case Language::python: return {"python3", file};
        case Language::go: return {"go", "run", file};
        case Language::shell: return {"sh", file};
        case Language::unknown: return {"sh", file};
    }
    return {"sh", file};
}

Language detect_language(const std::string& source) {
    // Ordered feature table; the shebang line wins.
    if (source.rfind("#!", 0) == 0) {
        const auto eol = source.find('\n');
        const std::string shebang = source.substr(0, eol);
        if (shebang.find("node") != std::string::npos) return Language::javascript;
        if (shebang.find("python") != std::string::npos) return Language::python;
        if (shebang.find("sh") != std::string::npos) return Language::shell;
    }
    if (source.find("require(") != std::string::npos ||
        source.find("module.exports") != std::string::npos)
        return Language::javascript;

    std::istringstream lines(source);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("def ", 0) == 0 || line.rfind("import ", 0) == 0)
            return Language::python;
    }
    if (source.find("package main") != std::string::npos ||
        source.find("func main") != std::string::npos)
        return Language::go;
    return Language::unknown;
}

namespace {

std::string marker_print_line(Language lang, const std::string& marker) {
    switch (lang) {
        case Language::javascript: return "\nconsole.log(\"" + marker + "\");\n";
        case Language::python: return "\nprint(\"" + marker + "\")\n";
        // A print cannot be appended to a go source without touching imports;
        // embed the marker as a trailing comment instead.
        case Language::go: return "\n// expected-marker: " + marker + "\n";
        case Language::shell:
        case Language::unknown: return "\necho \"" + marker + "\"\n";
    }
    return "";
}

std::vector<std::string> markers_in_source(const std::string& source,
                                           const std::vector<std::string>& candidates) {
    std::vector<std::string> found;
    for (const auto& m : candidates)
        if (!m.empty() && source.find(m) != std::string::npos) found.push_back(m);
    return found;
}

std::optional<std::vector<std::string>> parse_entry_directive(const std::string& reply) {
    // Optional "ENTRY: <argv...>" line outside the code fence.
    std::istringstream lines(reply);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind("ENTRY:", 0) != 0) continue;
        std::istringstream words(line.substr(6));
        std::vector<std::string> argv;
        std::string word;
        while (words >> word) argv.push_back(word);
        if (!argv.empty()) return argv;
    }
    return std::nullopt;
}

}  // namespace

PoCArtifact synthesize_poc(const planner::ExploitationPlan& plan,
                           const std::vector<planner::CodeEvidence>& evidence,
                           llm::Gateway& gateway) {
    CompletionRequest req;
    req.add(Role::system,
            "You write proof-of-concept exploits. Reply with a single fenced code "
            "block. Print one of the plan's success markers when the exploit "
            "works. The target source tree is available via the TARGET_REPO "
            "environment variable.");
    std::ostringstream body;
    body << "Task: synthesize proof-of-concept\n"
         << "Plan: " << json(plan).dump() << "\n"
         << "Evidence: " << json(evidence).dump() << "\n";
    req.add(Role::user, body.str());

    std::string source;
    std::string fence_tag;
    std::string reply_text;
    bool got_code = false;
    for (int round = 0; round <= llm::Gateway::kRepairRetries; ++round) {
        llm::CompletionResponse resp = gateway.complete(req);
        reply_text = resp.content;
        if (auto block = llm::extract_fenced_block(resp.content, &fence_tag)) {
            source = *block;
            got_code = true;
            break;
        }
        req.add(Role::assistant, resp.content);
        req.add(Role::user, "No code block found. Reply with a fenced code block only.");
    }
    if (!got_code || source.empty())
        throw Error(ErrorCode::no_code_block, "synthesis reply contains no code block");

    PoCArtifact artifact;
    artifact.language = language_from_name(fence_tag);
    if (artifact.language == Language::unknown) artifact.language = detect_language(source);
    artifact.success_markers =
        markers_in_source(source, plan.oracle_config.success_markers);
    if (artifact.success_markers.empty() &&
        !plan.oracle_config.success_markers.empty()) {
        // Marker auto-injection: keep the model's code, make it verifiable.
        const std::string& marker = plan.oracle_config.success_markers.front();
        const std::string inject = marker_print_line(artifact.language, marker);
        if (!inject.empty()) {
            source += inject;
            artifact.success_markers.push_back(marker);
        }
    }
    artifact.source = source;
    if (auto entry = parse_entry_directive(reply_text)) artifact.entry_command = *entry;
    artifact.generation = 0;
    artifact.artifact_id = "poc-" + llm::request_digest(req).substr(0, 12);
    return artifact;
}

SandboxSpec select_backend(const planner::ExploitationPlan& plan,
                           std::optional<planner::ExecutorBackend> override_backend,
                           const SandboxSpec& defaults) {
    SandboxSpec spec = defaults;
    if (override_backend)
        spec.backend = *override_backend;
    else
        spec.backend = plan.chosen_executor;
    return spec;
}

namespace {

ExecutionResult execute_local(const PoCArtifact& artifact, const SandboxSpec& sandbox,
                              const fs::path& poc_file) {
    detail::SpawnOptions opts;
    opts.argv = artifact.entry_command.empty()
                    ? default_entry_command(artifact.language)
                    : artifact.entry_command;
    opts.cwd = sandbox.working_dir.string();
    opts.sanitize_env = true;
    for (const auto& [k, v] : sandbox.env) opts.env[k] = v;
    opts.timeout_secs = sandbox.timeout_secs;
    opts.memory_limit = sandbox.memory_limit;
    (void)poc_file;

    detail::SpawnResult run = detail::spawn_capture(opts);
    ExecutionResult result;
    result.stdout_text = run.stdout_text;
    result.stderr_text = run.stderr_text;
    result.exit_code = run.exit_code;
    result.duration_ms = run.duration_ms;
    result.timed_out = run.timed_out;
    result.backend_used = planner::ExecutorBackend::local_process;
    result.artifact_id = artifact.artifact_id;
    return result;
}

ExecutionResult execute_container(const PoCArtifact& artifact, const SandboxSpec& sandbox) {
    std::string runtime;
    for (const char* candidate : {"docker", "podman"})
        if (detail::command_exists(candidate)) {
            runtime = candidate;
            break;
        }
    if (runtime.empty())
        throw Error(ErrorCode::backend_unavailable, "no container runtime on PATH");
    if (!sandbox.image)
        throw Error(ErrorCode::sandbox_setup_failure, "container backend requires an image");

    detail::SpawnOptions opts;
    opts.argv = {runtime, "run", "--rm",
                 "--network", sandbox.network == NetworkPolicy::none ? "none" : "bridge",
                 "--memory", std::to_string(sandbox.memory_limit),
                 "--cpus", std::to_string(sandbox.cpu_limit),
                 "-v", sandbox.working_dir.string() + ":/work",
                 "-w", "/work"};
    for (const auto& [k, v] : sandbox.env) {
        opts.argv.push_back("-e");
        opts.argv.push_back(k + "=" + v);
    }
    opts.argv.push_back(*sandbox.image);
    const auto entry = artifact.entry_command.empty()
                           ? default_entry_command(artifact.language)
                           : artifact.entry_command;
    opts.argv.insert(opts.argv.end(), entry.begin(), entry.end());
    opts.timeout_secs = sandbox.timeout_secs;

    detail::SpawnResult run = detail::spawn_capture(opts);
    ExecutionResult result;
    result.stdout_text = run.stdout_text;
    result.stderr_text = run.stderr_text;
    result.exit_code = run.exit_code;
    result.duration_ms = run.duration_ms;
    result.timed_out = run.timed_out;
    result.backend_used = planner::ExecutorBackend::container;
    result.artifact_id = artifact.artifact_id;
    return result;
}

}  // namespace

ExecutionResult execute(const PoCArtifact& artifact, const SandboxSpec& sandbox) {
    if (artifact.source.empty())
        throw Error(ErrorCode::sandbox_setup_failure, "artifact has no source");
    std::error_code ec;
    fs::create_directories(sandbox.working_dir, ec);
    if (ec || !fs::is_directory(sandbox.working_dir))
        throw Error(ErrorCode::sandbox_setup_failure,
                    "cannot create working dir: " + sandbox.working_dir.string());

    const fs::path poc_file =
        sandbox.working_dir / (std::string("poc.") + language_extension(artifact.language));
    {
        std::ofstream out(poc_file);
        if (!out)
            throw Error(ErrorCode::sandbox_setup_failure,
                        "cannot materialize artifact: " + poc_file.string());
        out << artifact.source;
    }

    if (sandbox.backend == planner::ExecutorBackend::container)
        return execute_container(artifact, sandbox);
    return execute_local(artifact, sandbox, poc_file);
}

}  // namespace pocforge::exec
