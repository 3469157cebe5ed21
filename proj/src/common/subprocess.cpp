#include "subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>

#include "pocforge/error.hpp"

namespace pocforge::detail {

namespace {

using Clock = std::chrono::steady_clock;

[[noreturn]] void child_exec(const SpawnOptions& options, int out_fd, int err_fd) {
    setpgid(0, 0);
    dup2(out_fd, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);
    close(out_fd);
    close(err_fd);

    if (!options.cwd.empty() && chdir(options.cwd.c_str()) != 0) _exit(127);

    if (options.memory_limit) {
        rlimit lim{static_cast<rlim_t>(*options.memory_limit),
                   static_cast<rlim_t>(*options.memory_limit)};
        setrlimit(RLIMIT_AS, &lim);
    }

    std::vector<std::string> env_strings;
    if (options.sanitize_env) {
        for (const char* keep : {"PATH", "LANG", "LC_ALL", "TERM"})
            if (const char* v = std::getenv(keep))
                env_strings.push_back(std::string(keep) + "=" + v);
        env_strings.push_back("HOME=" + (options.cwd.empty() ? std::string("/tmp") : options.cwd));
        for (const auto& [k, v] : options.env) env_strings.push_back(k + "=" + v);
    } else {
        for (const auto& [k, v] : options.env) setenv(k.c_str(), v.c_str(), 1);
    }

    std::vector<char*> argv;
    for (const auto& a : options.argv) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    if (options.sanitize_env) {
        std::vector<char*> envp;
        for (const auto& e : env_strings) envp.push_back(const_cast<char*>(e.c_str()));
        envp.push_back(nullptr);
        execvpe(argv[0], argv.data(), envp.data());
    } else {
        execvp(argv[0], argv.data());
    }
    _exit(127);
}

void drain(int fd, std::string& sink) {
    char buf[4096];
    for (;;) {
        ssize_t n = read(fd, buf, sizeof(buf));
        if (n > 0)
            sink.append(buf, static_cast<std::size_t>(n));
        else
            return;
    }
}

}  // namespace

bool command_exists(const std::string& name) {
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::string paths(path);
    std::size_t start = 0;
    while (start <= paths.size()) {
        auto end = paths.find(':', start);
        if (end == std::string::npos) end = paths.size();
        std::string candidate = paths.substr(start, end - start) + "/" + name;
        if (access(candidate.c_str(), X_OK) == 0) return true;
        start = end + 1;
    }
    return false;
}

SpawnResult spawn_capture(const SpawnOptions& options) {
    if (options.argv.empty())
        throw Error(ErrorCode::sandbox_setup_failure, "empty command line");

    int out_pipe[2], err_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
        throw Error(ErrorCode::sandbox_setup_failure, "pipe() failed");

    const auto start = Clock::now();
    pid_t pid = fork();
    if (pid < 0) throw Error(ErrorCode::sandbox_setup_failure, "fork() failed");
    if (pid == 0) {
        close(out_pipe[0]);
        close(err_pipe[0]);
        child_exec(options, out_pipe[1], err_pipe[1]);
    }

    close(out_pipe[1]);
    close(err_pipe[1]);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
    fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

    SpawnResult result;
    bool out_open = true, err_open = true;
    int status = 0;
    bool exited = false;

    const auto deadline =
        options.timeout_secs > 0
            ? std::optional<Clock::time_point>(start + std::chrono::seconds(options.timeout_secs))
            : std::nullopt;

    while (!exited || out_open || err_open) {
        if (!exited) {
            pid_t r = waitpid(pid, &status, WNOHANG);
            if (r == pid) exited = true;
        }
        if (!exited && deadline && Clock::now() >= *deadline) {
            kill(-pid, SIGKILL);
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            result.timed_out = true;
            exited = true;
        }

        pollfd fds[2];
        nfds_t nfds = 0;
        if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};
        if (nfds > 0) {
            poll(fds, nfds, 50);
            char buf[4096];
            if (out_open) {
                ssize_t n = read(out_pipe[0], buf, sizeof(buf));
                if (n > 0) result.stdout_text.append(buf, static_cast<std::size_t>(n));
                else if (n == 0) out_open = false;
                else if (errno != EAGAIN && errno != EWOULDBLOCK) out_open = false;
            }
            if (err_open) {
                ssize_t n = read(err_pipe[0], buf, sizeof(buf));
                if (n > 0) result.stderr_text.append(buf, static_cast<std::size_t>(n));
                else if (n == 0) err_open = false;
                else if (errno != EAGAIN && errno != EWOULDBLOCK) err_open = false;
            }
        } else if (!exited) {
            usleep(10000);
        }
        if (exited && result.timed_out) break;  // group killed, drain what's left
    }

    if (result.timed_out) {
        drain(out_pipe[0], result.stdout_text);
        drain(err_pipe[0], result.stderr_text);
    }
    close(out_pipe[0]);
    close(err_pipe[0]);

    if (!exited) waitpid(pid, &status, 0);
    if (!result.timed_out && WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    if (!result.timed_out && WIFSIGNALED(status))
        result.exit_code = 128 + WTERMSIG(status);

    result.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                             Clock::now() - start)
                             .count();
    return result;
}

}  // namespace pocforge::detail
