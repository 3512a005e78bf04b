#include "pda/detector.hpp"
#include "pda/error.hpp"

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

namespace pda {

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    out += "'";
    return out;
}

std::string substitute(std::string tmpl, const std::string& key, const std::string& value) {
    for (auto pos = tmpl.find(key); pos != std::string::npos; pos = tmpl.find(key, pos + value.size())) {
        tmpl.replace(pos, key.size(), value);
    }
    return tmpl;
}

class TempDir {
public:
    TempDir() {
        auto pattern = (std::filesystem::temp_directory_path() / "pda-regen-XXXXXX").string();
        if (::mkdtemp(pattern.data()) == nullptr) throw IoError("cannot create temporary directory");
        path_ = pattern;
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

// Runs `command` under /bin/sh in its own process group; returns the exit status.
int run_with_timeout(const std::string& command, std::chrono::seconds timeout) {
    const pid_t pid = ::fork();
    if (pid < 0) throw RegenerationError("fork failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    auto pause = std::chrono::milliseconds(1);
    for (;;) {
        const pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0) throw RegenerationError("waitpid failed for regeneration command");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw RegenerationError("regeneration command timed out after " + std::to_string(timeout.count()) + " s");
        }
        std::this_thread::sleep_for(pause);
        pause = std::min(pause * 2, std::chrono::milliseconds(50));
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    if (WIFSIGNALED(status)) return 128 + WTERMSIG(status);
    return -1;
}

} // namespace

CommandRegenerator::CommandRegenerator(CommandSpec spec) : spec_(std::move(spec)) {
    if (spec_.command_template.find("{in}") == std::string::npos ||
        spec_.command_template.find("{out}") == std::string::npos) {
        throw ConfigError("regeneration command must contain {in} and {out} placeholders");
    }
    if (spec_.timeout.count() <= 0) throw ConfigError("regeneration timeout must be positive");
}

std::vector<FeatureVector> CommandRegenerator::regenerate(std::span<const Sample> samples) {
    if (samples.empty()) return {};
    std::lock_guard lock(mutex_);

    const auto dim = samples.front().raw.size();
    FeatureSet batch(dim);
    for (const auto& s : samples) batch.push_back(s.raw);

    TempDir dir;
    const auto in_path = (dir.path() / "in.pdaf").string();
    const auto out_path = (dir.path() / "out.pdaf").string();
    save_feature_file(batch, in_path);

    auto command = substitute(spec_.command_template, "{in}", shell_quote(in_path));
    command = substitute(command, "{out}", shell_quote(out_path));
    ++invocations_;
    const int status = run_with_timeout(command, spec_.timeout);
    if (status != 0) {
        throw RegenerationError("regeneration command exited with status " + std::to_string(status));
    }

    FeatureSet out;
    try {
        out = load_feature_file(out_path);
    } catch (const Error& e) {
        throw RegenerationError(std::string("malformed regeneration output: ") + e.what());
    }
    if (out.size() != samples.size()) {
        throw RegenerationError("regeneration output holds " + std::to_string(out.size()) + " rows, expected " +
                                std::to_string(samples.size()));
    }
    if (out.dim() != dim) {
        throw RegenerationError("regeneration output has dim " + std::to_string(out.dim()) + ", expected " +
                                std::to_string(dim));
    }
    std::vector<FeatureVector> result;
    result.reserve(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) result.push_back(out.vector(i));
    return result;
}

std::unique_ptr<Regenerator> command_regenerator(CommandSpec spec) {
    return std::make_unique<CommandRegenerator>(std::move(spec));
}

} // namespace pda
