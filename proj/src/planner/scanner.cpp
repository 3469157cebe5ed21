#include "pocforge/planner/scanner.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "../common/subprocess.hpp"

namespace pocforge::planner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

bool scannable(const fs::path& p) {
    static const std::set<std::string> exts = {".js", ".mjs", ".ts", ".py",
                                               ".go", ".sh", ".json"};
    return exts.count(p.extension().string()) > 0;
}

bool skipped_dir(const fs::path& p) {
    const auto name = p.filename().string();
    return name == "node_modules" || name == ".git" || name == "__pycache__";
}

}  // namespace

std::vector<ScanFinding> BuiltinScanner::scan(const fs::path& repo,
                                              const std::vector<std::string>& keywords) {
    std::vector<ScanFinding> findings;
    std::vector<fs::path> files;
    for (auto it = fs::recursive_directory_iterator(repo);
         it != fs::recursive_directory_iterator(); ++it) {
        if (it->is_directory() && skipped_dir(it->path())) {
            it.disable_recursion_pending();
            continue;
        }
        if (it->is_regular_file() && scannable(it->path())) files.push_back(it->path());
    }
    std::sort(files.begin(), files.end());

    for (const auto& file : files) {
        std::ifstream in(file);
        std::string line;
        int lineno = 0;
        const std::string rel = fs::relative(file, repo).generic_string();
        while (std::getline(in, line)) {
            ++lineno;
            bool hit = std::any_of(keywords.begin(), keywords.end(),
                                   [&](const std::string& kw) {
                                       return !kw.empty() &&
                                              line.find(kw) != std::string::npos;
                                   });
            if (hit)
                findings.push_back({rel, lineno, "builtin.keyword", "INFO", line});
        }
    }
    return findings;
}

CommandScanner::CommandScanner(std::vector<std::string> command)
    : command_(std::move(command)) {
    if (command_.empty())
        throw Error(ErrorCode::config_error, "scanner command must be non-empty");
}

std::vector<ScanFinding> CommandScanner::scan(const fs::path& repo,
                                              const std::vector<std::string>&) {
    detail::SpawnOptions opts;
    opts.argv = command_;
    opts.argv.push_back(repo.string());
    opts.timeout_secs = 120;
    detail::SpawnResult run = detail::spawn_capture(opts);
    if (run.timed_out || !run.exit_code || *run.exit_code != 0)
        throw Error(ErrorCode::scanner_failure,
                    "scanner subprocess failed: " + run.stderr_text);

    json doc = json::parse(run.stdout_text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array())
        throw Error(ErrorCode::scanner_failure, "scanner emitted malformed findings");

    std::vector<ScanFinding> findings;
    for (const auto& item : doc) {
        if (!item.contains("path") || !item.contains("line"))
            throw Error(ErrorCode::scanner_failure, "scanner finding missing path/line");
        findings.push_back({item["path"].get<std::string>(), item["line"].get<int>(),
                            item.value("rule_id", ""), item.value("severity", ""),
                            item.value("snippet", "")});
    }
    return findings;
}

}  // namespace pocforge::planner
