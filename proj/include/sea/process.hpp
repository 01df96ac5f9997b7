#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sea {

struct Spawn {
  std::vector<std::string> argv;                            // argv[0] = program
  std::vector<std::pair<std::string, std::string>> env;     // setenv overrides
  std::vector<std::string> env_unset;                       // unsetenv in child
  std::optional<std::string> stdout_path;                   // redirect if set
  std::optional<std::string> stderr_path;
  std::optional<std::string> chdir_to;
};

struct ExitStatus {
  bool signaled = false;
  int code = 0;  // exit code, or signal number when signaled
  // Shell convention: 128+signal for signal deaths.
  int shell_code() const { return signaled ? 128 + code : code; }
  bool success() const { return !signaled && code == 0; }
};

pid_t spawn_process(const Spawn& spec);
ExitStatus wait_process(pid_t pid);
ExitStatus run_process(const Spawn& spec);

// Runs the child while forwarding SIGINT/SIGTERM to it; used by the launcher
// so interactive interrupts reach the application, not just the wrapper.
ExitStatus run_forwarding_signals(const Spawn& spec);

// True if a second interrupt arrived while forwarding (callers treat it as
// "abort the drain").
bool interrupt_requested();

// Directory holding the running executable (via /proc/self/exe).
std::filesystem::path self_exe_dir();

// Locates libsea_shim.so: $SEA_SHIM, then ../lib and . relative to the
// running executable. Empty path when not found.
std::filesystem::path locate_shim();

}  // namespace sea
