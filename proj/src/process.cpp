#include "sea/process.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace sea {

namespace {
std::atomic<pid_t> g_forward_to{0};
std::atomic<int> g_interrupts{0};

void forward_handler(int sig) {
  g_interrupts.fetch_add(1);
  pid_t child = g_forward_to.load();
  if (child > 0) ::kill(child, sig);
}
}  // namespace

pid_t spawn_process(const Spawn& spec) {
  pid_t pid = ::fork();
  if (pid != 0) return pid;

  // Child.
  for (const auto& name : spec.env_unset) ::unsetenv(name.c_str());
  for (const auto& [k, v] : spec.env) ::setenv(k.c_str(), v.c_str(), 1);
  if (spec.chdir_to && ::chdir(spec.chdir_to->c_str()) != 0) _exit(127);
  auto redirect = [](const std::string& path, int target_fd) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (fd < 0) _exit(127);
    ::dup2(fd, target_fd);
    ::close(fd);
  };
  if (spec.stdout_path) redirect(*spec.stdout_path, STDOUT_FILENO);
  if (spec.stderr_path) redirect(*spec.stderr_path, STDERR_FILENO);

  std::vector<char*> argv;
  argv.reserve(spec.argv.size() + 1);
  for (const auto& a : spec.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  ::execvp(argv[0], argv.data());
  std::fprintf(stderr, "sea: exec %s: %s\n", argv[0], std::strerror(errno));
  _exit(127);
}

ExitStatus wait_process(pid_t pid) {
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) return {false, 127};
  }
  if (WIFSIGNALED(status)) return {true, WTERMSIG(status)};
  return {false, WEXITSTATUS(status)};
}

ExitStatus run_process(const Spawn& spec) {
  pid_t pid = spawn_process(spec);
  if (pid < 0) return {false, 127};
  return wait_process(pid);
}

ExitStatus run_forwarding_signals(const Spawn& spec) {
  g_interrupts.store(0);
  pid_t pid = spawn_process(spec);
  if (pid < 0) return {false, 127};
  g_forward_to.store(pid);

  struct sigaction sa {};
  sa.sa_handler = forward_handler;
  sigemptyset(&sa.sa_mask);
  struct sigaction old_int {}, old_term {};
  ::sigaction(SIGINT, &sa, &old_int);
  ::sigaction(SIGTERM, &sa, &old_term);

  ExitStatus st = wait_process(pid);

  g_forward_to.store(0);
  ::sigaction(SIGINT, &old_int, nullptr);
  ::sigaction(SIGTERM, &old_term, nullptr);
  return st;
}

bool interrupt_requested() { return g_interrupts.load() > 0; }

std::filesystem::path self_exe_dir() {
  char buf[4096];
  ssize_t n = ::readlink("/proc/self/exe", buf, sizeof(buf) - 1);
  if (n <= 0) return {};
  buf[n] = '\0';
  return std::filesystem::path(buf).parent_path();
}

std::filesystem::path locate_shim() {
  if (const char* env = ::getenv("SEA_SHIM"); env && *env) {
    std::filesystem::path p = env;
    if (std::filesystem::exists(p)) return p;
  }
  std::filesystem::path dir = self_exe_dir();
  for (const auto& candidate :
       {dir / ".." / "lib" / "libsea_shim.so", dir / "libsea_shim.so"}) {
    std::error_code ec;
    if (std::filesystem::exists(candidate, ec))
      return std::filesystem::weakly_canonical(candidate, ec);
  }
  return {};
}

}  // namespace sea
