#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pocforge::detail {

struct SpawnOptions {
    std::vector<std::string> argv;
    std::string cwd;                               // empty = inherit
    std::map<std::string, std::string> env;        // full environment when set
    bool sanitize_env = false;                     // PATH/HOME/LANG only, plus env
    std::optional<std::int64_t> memory_limit;      // RLIMIT_AS, bytes
    int timeout_secs = 0;                          // 0 = no timeout
};

struct SpawnResult {
    std::string stdout_text;
    std::string stderr_text;
    std::optional<int> exit_code;  // absent when killed on timeout
    std::int64_t duration_ms = 0;
    bool timed_out = false;
};

/// Runs argv in its own process group; on timeout the whole group is killed.
SpawnResult spawn_capture(const SpawnOptions& options);

bool command_exists(const std::string& name);

}  // namespace pocforge::detail
