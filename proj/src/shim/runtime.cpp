#include "runtime.hpp"

#include <fcntl.h>
#include <pthread.h>
#include <unistd.h>

#include <atomic>
#include <condition_variable>
#include <cstring>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sea/config.hpp"
#include "sea/flusher.hpp"
#include "sea/fsutil.hpp"
#include "sea/log.hpp"
#include "sea/namespace_view.hpp"

namespace seashim {

namespace fs = std::filesystem;
using sea::CallFn;

namespace {

thread_local int t_guard_depth = 0;

enum class State : int { uninit = 0, initializing, active, passthrough };
std::atomic<State> g_state{State::uninit};

struct FdInfo {
  std::string logical;
  int tier = 0;
  bool writer = false;
};

struct SeaDir {
  static constexpr std::uint32_t kMagic = 0x5ea0d1e5;
  std::uint32_t magic = kMagic;
  std::vector<std::pair<std::string, unsigned char>> entries;  // name, d_type
  size_t index = 0;
  struct dirent64 buf64 {};
};

struct Runtime {
  sea::SeaConfig config;
  sea::CallStats stats;
  std::string stats_path;  // empty = do not emit
  pid_t owner_pid = 0;

  std::mutex fd_mu;
  std::unordered_map<int, FdInfo> fds;
  std::unordered_map<FILE*, int> streams;
  std::unordered_map<std::string, int> open_writers;

  std::mutex flight_mu;
  std::condition_variable flight_cv;
  std::set<std::string> in_flight;

  std::unique_ptr<sea::FlusherThread> flusher;

  int persistent() const { return config.persistent_index(); }
};

// Leaked deliberately: the runtime must outlive every static destructor in
// the host application.
Runtime* g_rt = nullptr;

bool env_is(const char* name, const char* value) {
  const char* v = ::getenv(name);
  return v && std::strcmp(v, value) == 0;
}

void lock_runtime_mutexes() {
  if (!g_rt) return;
  g_rt->fd_mu.lock();
  g_rt->flight_mu.lock();
}

void unlock_runtime_mutexes() {
  if (!g_rt) return;
  g_rt->flight_mu.unlock();
  g_rt->fd_mu.unlock();
}

void init_runtime() {
  Guard guard;  // everything below must pass through untouched

  auto rt = std::make_unique<Runtime>();
  rt->owner_pid = ::getpid();

  fs::path config_path = sea::default_config_path();
  try {
    rt->config = sea::load_config(config_path);
  } catch (const std::exception& e) {
    sea::log_error("config %s unusable, running in passthrough mode: %s",
                   config_path.string().c_str(), e.what());
    g_state.store(State::passthrough);
    return;
  }

  if (const char* lv = ::getenv("SEA_LOG"); lv && *lv) {
    std::string s = lv;
    if (s == "off") rt->config.log_level = sea::LogLevel::off;
    else if (s == "error") rt->config.log_level = sea::LogLevel::error;
    else if (s == "info") rt->config.log_level = sea::LogLevel::info;
    else if (s == "debug") rt->config.log_level = sea::LogLevel::debug;
  }
  sea::set_log_level(rt->config.log_level);

  if (const char* sp = ::getenv("SEA_STATS"); sp && *sp) rt->stats_path = sp;
  else if (!rt->config.stats_path.empty()) rt->stats_path = rt->config.stats_path.string();

  try {
    int created = sea::mirror_directories(rt->config);
    if (created > 0) sea::log_info("mirrored %d directories at startup", created);
  } catch (const std::exception& e) {
    sea::log_error("directory mirroring failed: %s", e.what());
  }

  sea::log_info("%zu tiers, mount=%s", rt->config.tiers.size(),
                rt->config.mount_dir.string().c_str());

  g_rt = rt.release();

  if (env_is("SEA_MASTER", "1")) {
    bool enable_flush = !env_is("SEA_FLUSH", "0");
    bool enable_prefetch = env_is("SEA_PREFETCH", "1");
    if (enable_flush || enable_prefetch) {
      sea::SyncHooks hooks;
      hooks.thread_init = [] { ++t_guard_depth; };
      hooks.has_open_writer = [](const std::string& logical) {
        std::lock_guard<std::mutex> lk(g_rt->fd_mu);
        auto it = g_rt->open_writers.find(logical);
        return it != g_rt->open_writers.end() && it->second > 0;
      };
      hooks.mark_in_flight = [](const std::string& logical) {
        std::lock_guard<std::mutex> lk(g_rt->flight_mu);
        g_rt->in_flight.insert(logical);
      };
      hooks.clear_in_flight = [](const std::string& logical) {
        {
          std::lock_guard<std::mutex> lk(g_rt->flight_mu);
          g_rt->in_flight.erase(logical);
        }
        g_rt->flight_cv.notify_all();
      };
      g_rt->flusher = std::make_unique<sea::FlusherThread>(g_rt->config, std::move(hooks),
                                                           enable_flush, enable_prefetch);
      g_rt->flusher->start();
      sea::log_info("master: flusher=%s prefetcher=%s interval=%lldms",
                    enable_flush ? "on" : "off", enable_prefetch ? "on" : "off",
                    static_cast<long long>(g_rt->config.flush_interval.count()));
    }
    // Children spawned from here must not host a second flusher.
    ::unsetenv("SEA_MASTER");
  }

  // A thread forking while another holds a runtime lock would deadlock the
  // child on its first intercepted call.
  ::pthread_atfork(lock_runtime_mutexes, unlock_runtime_mutexes, unlock_runtime_mutexes);

  g_state.store(State::active);
}

// Blocks briefly while the flusher moves this path; prevents the
// read-modify-write-vs-move race inside the master process.
void wait_not_in_flight(const std::string& logical) {
  if (!g_rt || !g_rt->flusher) return;
  std::unique_lock<std::mutex> lk(g_rt->flight_mu);
  g_rt->flight_cv.wait_for(lk, std::chrono::seconds(10),
                           [&] { return g_rt->in_flight.count(logical) == 0; });
}

std::optional<sea::MaskedPath> mask(const char* path) {
  if (!path) return std::nullopt;
  return sea::mask_path(sea::normalize_abs(path), g_rt->config);
}

// Absolute form of a dirfd-relative path, via /proc. nullopt = not resolvable
// (caller passes through).
std::optional<std::string> resolve_at(int dirfd, const char* path) {
  if (!path) return std::nullopt;
  if (path[0] == '/') return sea::normalize_abs(path);
  if (dirfd == AT_FDCWD) return sea::normalize_abs(path);
  char link[64];
  std::snprintf(link, sizeof(link), "/proc/self/fd/%d", dirfd);
  char buf[4096];
  ssize_t n = ::readlink(link, buf, sizeof(buf) - 1);
  if (n <= 0) return std::nullopt;
  buf[n] = '\0';
  return sea::normalize_abs(std::string(buf) + "/" + path);
}

void track_fd(int fd, const std::string& logical, int tier, bool writer) {
  std::lock_guard<std::mutex> lk(g_rt->fd_mu);
  g_rt->fds[fd] = FdInfo{logical, tier, writer};
  if (writer) g_rt->open_writers[logical]++;
}

void count(CallFn fn, int tier) {
  g_rt->stats.record(fn, 0, 0, tier, tier == g_rt->persistent());
}

bool logical_parent_exists(const std::string& logical) {
  auto pos = logical.rfind('/');
  if (pos == std::string::npos) return true;  // parent is the mount root
  std::string parent = logical.substr(0, pos);
  for (const auto& t : g_rt->config.tiers) {
    std::error_code ec;
    if (fs::is_directory(sea::unmask(parent, t.priority, g_rt->config), ec)) return true;
  }
  return false;
}

struct OpenPlan {
  fs::path physical;
  int tier = 0;
  int err = 0;  // errno; nonzero = fail without opening
  bool trunc_cleanup = false;
};

OpenPlan plan_open(const std::string& logical, int flags) {
  OpenPlan plan;
  const auto& config = g_rt->config;
  int accmode = flags & O_ACCMODE;
  bool write_intent = accmode != O_RDONLY || (flags & (O_CREAT | O_TRUNC));

  if (write_intent) wait_not_in_flight(logical);

  auto locs = sea::probe_locations(logical, config);
  const sea::FileLocation* fastest = locs.empty() ? nullptr : &locs.front();

  if ((flags & O_CREAT) && (flags & O_EXCL) && fastest) {
    plan.err = EEXIST;
    return plan;
  }

  if (!write_intent) {
    if (!fastest) {
      plan.err = ENOENT;
      return plan;
    }
    plan.physical = sea::unmask(logical, fastest->tier, config);
    plan.tier = fastest->tier;
    return plan;
  }

  if (fastest && fastest->is_dir) {
    plan.err = EISDIR;
    return plan;
  }

  if (fastest && (flags & O_TRUNC)) {
    // Content is discarded, so place the new version like a fresh create and
    // clear stale cache copies that would shadow or resurrect old bytes.
    auto res = sea::resolve_write_fs(logical, 0, config);
    if (!res) {
      plan.err = ENOSPC;
      return plan;
    }
    plan.physical = res->physical;
    plan.tier = res->tier;
    plan.trunc_cleanup = true;
    return plan;
  }

  if (fastest) {
    // Preserving semantics (append or read-modify-write): operate on the
    // fastest existing copy, promoting a persistent-only file into cache
    // first so subsequent I/O runs at cache speed.
    if (fastest->tier == config.persistent_index()) {
      auto res = sea::resolve_write_fs(logical, fastest->size, config);
      if (res && res->tier != fastest->tier) {
        std::error_code ec;
        if (sea::copy_file_atomic(sea::unmask(logical, fastest->tier, config), res->physical,
                                  /*preserve_mtime=*/true, ec)) {
          plan.physical = res->physical;
          plan.tier = res->tier;
          return plan;
        }
        sea::log_error("promotion of %s failed: %s", logical.c_str(), ec.message().c_str());
      }
    }
    plan.physical = sea::unmask(logical, fastest->tier, config);
    plan.tier = fastest->tier;
    return plan;
  }

  // Fresh create.
  if (!(flags & O_CREAT)) {
    plan.err = ENOENT;
    return plan;
  }
  if (!logical_parent_exists(logical)) {
    plan.err = ENOENT;
    return plan;
  }
  auto res = sea::resolve_write_fs(logical, 0, config);
  if (!res) {
    plan.err = ENOSPC;  // all writable tiers report insufficient space
    return plan;
  }
  plan.physical = res->physical;
  plan.tier = res->tier;
  return plan;
}

void trunc_cleanup(const std::string& logical, int kept_tier) {
  for (const auto& t : g_rt->config.tiers) {
    if (t.priority == kept_tier || t.priority == g_rt->persistent()) continue;
    ::unlink(sea::unmask(logical, t.priority, g_rt->config).c_str());
  }
}

int open_common(const std::string& logical, int flags, mode_t mode, CallFn fn) {
  OpenPlan plan = plan_open(logical, flags);
  count(fn, plan.err ? -1 : plan.tier);
  if (plan.err) {
    errno = plan.err;
    return -1;
  }
  int fd = ::open(plan.physical.c_str(), flags, mode);
  if (fd >= 0) {
    if (plan.trunc_cleanup) trunc_cleanup(logical, plan.tier);
    bool writer = (flags & O_ACCMODE) != O_RDONLY;
    track_fd(fd, logical, plan.tier, writer);
  }
  return fd;
}

// Directory-stream registry. readdir/closedir must distinguish our synthetic
// handles from real DIR*s cheaply.
std::mutex g_dirs_mu;
std::unordered_set<void*> g_dirs;

}  // namespace

Guard::Guard() { ++t_guard_depth; }
Guard::~Guard() { --t_guard_depth; }

bool guard_held() { return t_guard_depth > 0; }

bool engaged() {
  State s = g_state.load(std::memory_order_acquire);
  if (s == State::active) return true;
  if (s == State::passthrough || s == State::initializing) return false;
  State expected = State::uninit;
  if (!g_state.compare_exchange_strong(expected, State::initializing)) return false;
  init_runtime();
  return g_state.load() == State::active;
}

void shutdown() {
  if (g_state.load() != State::active || !g_rt) return;
  Guard guard;
  if (g_rt->flusher && ::getpid() == g_rt->owner_pid) g_rt->flusher->stop();
  if (!g_rt->stats_path.empty())
    sea::append_record_line(g_rt->stats_path, g_rt->stats.to_line());
  g_state.store(State::passthrough);
}

int do_open(const char* path, int flags, mode_t mode, CallFn fn, bool& handled) {
  auto m = mask(path);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  return open_common(m->logical, flags, mode, fn);
}

int do_openat(int dirfd, const char* path, int flags, mode_t mode, CallFn fn, bool& handled) {
  auto abs = resolve_at(dirfd, path);
  if (!abs) {
    handled = false;
    return -1;
  }
  auto m = sea::mask_path(*abs, g_rt->config);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  return open_common(m->logical, flags, mode, fn);
}

namespace {
int fopen_mode_flags(const char* mode) {
  int flags = 0;
  bool plus = std::strchr(mode, '+') != nullptr;
  switch (mode[0]) {
    case 'r': flags = plus ? O_RDWR : O_RDONLY; break;
    case 'w': flags = (plus ? O_RDWR : O_WRONLY) | O_CREAT | O_TRUNC; break;
    case 'a': flags = (plus ? O_RDWR : O_WRONLY) | O_CREAT | O_APPEND; break;
    default: return -1;
  }
  if (std::strchr(mode, 'x')) flags |= O_EXCL;
  if (std::strchr(mode, 'e')) flags |= O_CLOEXEC;
  return flags;
}
}  // namespace

FILE* do_fopen(const char* path, const char* mode, CallFn fn, bool& handled,
               FILE* freopen_stream) {
  auto m = mask(path);
  if (!m || m->logical.empty() || !mode) {
    handled = false;
    return nullptr;
  }
  handled = true;
  int flags = fopen_mode_flags(mode);
  if (flags < 0) {
    count(fn, -1);
    errno = EINVAL;
    return nullptr;
  }
  OpenPlan plan = plan_open(m->logical, flags);
  count(fn, plan.err ? -1 : plan.tier);
  if (plan.err) {
    errno = plan.err;
    return nullptr;
  }
  FILE* f = freopen_stream ? ::freopen(plan.physical.c_str(), mode, freopen_stream)
                           : ::fopen(plan.physical.c_str(), mode);
  if (f) {
    if (plan.trunc_cleanup) trunc_cleanup(m->logical, plan.tier);
    int fd = ::fileno(f);
    bool writer = (flags & O_ACCMODE) != O_RDONLY;
    track_fd(fd, m->logical, plan.tier, writer);
    std::lock_guard<std::mutex> lk(g_rt->fd_mu);
    g_rt->streams[f] = fd;
  }
  return f;
}

int do_stat(const char* path, struct stat* st, bool follow, CallFn fn, bool& handled) {
  auto m = mask(path);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  auto locs = sea::probe_locations(m->logical, g_rt->config);
  if (locs.empty()) {
    count(fn, -1);
    errno = ENOENT;
    return -1;
  }
  int tier = locs.front().tier;
  count(fn, tier);
  fs::path physical = sea::unmask(m->logical, tier, g_rt->config);
  return follow ? ::stat(physical.c_str(), st) : ::lstat(physical.c_str(), st);
}

int do_fstatat(int dirfd, const char* path, struct stat* st, int at_flags, bool& handled) {
  auto abs = resolve_at(dirfd, path);
  if (!abs) {
    handled = false;
    return -1;
  }
  auto m = sea::mask_path(*abs, g_rt->config);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  auto locs = sea::probe_locations(m->logical, g_rt->config);
  if (locs.empty()) {
    count(CallFn::fstatat, -1);
    errno = ENOENT;
    return -1;
  }
  int tier = locs.front().tier;
  count(CallFn::fstatat, tier);
  fs::path physical = sea::unmask(m->logical, tier, g_rt->config);
  bool follow = !(at_flags & AT_SYMLINK_NOFOLLOW);
  return follow ? ::stat(physical.c_str(), st) : ::lstat(physical.c_str(), st);
}

int do_access(const char* path, int amode, bool& handled) {
  auto m = mask(path);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  auto locs = sea::probe_locations(m->logical, g_rt->config);
  if (locs.empty()) {
    count(CallFn::access, -1);
    errno = ENOENT;
    return -1;
  }
  int tier = locs.front().tier;
  count(CallFn::access, tier);
  return ::access(sea::unmask(m->logical, tier, g_rt->config).c_str(), amode);
}

int do_chmod(const char* path, mode_t mode, bool& handled) {
  auto m = mask(path);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  auto locs = sea::probe_locations(m->logical, g_rt->config);
  if (locs.empty()) {
    count(CallFn::chmod, -1);
    errno = ENOENT;
    return -1;
  }
  count(CallFn::chmod, locs.front().tier);
  // Applied to every copy so the mode survives whichever copy gets flushed.
  int rc = 0;
  for (const auto& l : locs) {
    if (::chmod(sea::unmask(m->logical, l.tier, g_rt->config).c_str(), mode) != 0) rc = -1;
  }
  return rc;
}

int do_truncate(const char* path, off_t length, bool& handled) {
  auto m = mask(path);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  wait_not_in_flight(m->logical);
  auto locs = sea::probe_locations(m->logical, g_rt->config);
  if (locs.empty()) {
    count(CallFn::truncate, -1);
    errno = ENOENT;
    return -1;
  }
  int tier = locs.front().tier;
  count(CallFn::truncate, tier);
  // The fastest copy is authoritative; the flusher propagates the new length.
  return ::truncate(sea::unmask(m->logical, tier, g_rt->config).c_str(), length);
}

namespace {
int mkdir_common(const std::string& logical, mode_t mode) {
  count(CallFn::mkdir, 0);
  if (logical.empty()) {
    errno = EEXIST;
    return -1;
  }
  if (!sea::probe_locations(logical, g_rt->config).empty()) {
    errno = EEXIST;
    return -1;
  }
  if (!logical_parent_exists(logical)) {
    errno = ENOENT;
    return -1;
  }
  // Mirrored onto every tier immediately to keep the union view coherent.
  int rc = 0;
  int err = 0;
  for (const auto& t : g_rt->config.tiers) {
    fs::path p = sea::unmask(logical, t.priority, g_rt->config);
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (::mkdir(p.c_str(), mode) != 0 && errno != EEXIST) {
      sea::log_error("mkdir %s failed on tier %d: %s", logical.c_str(), t.priority,
                     std::strerror(errno));
      rc = -1;
      err = errno;
    }
  }
  if (rc != 0) errno = err;
  return rc;
}
}  // namespace

int do_mkdir(const char* path, mode_t mode, bool& handled) {
  auto m = mask(path);
  if (!m) {
    handled = false;
    return -1;
  }
  handled = true;
  return mkdir_common(m->logical, mode);
}

int do_mkdirat(int dirfd, const char* path, mode_t mode, bool& handled) {
  auto abs = resolve_at(dirfd, path);
  if (!abs) {
    handled = false;
    return -1;
  }
  auto m = sea::mask_path(*abs, g_rt->config);
  if (!m) {
    handled = false;
    return -1;
  }
  handled = true;
  return mkdir_common(m->logical, mode);
}

int do_rmdir(const char* path, bool& handled) {
  auto m = mask(path);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  count(CallFn::rmdir, 0);
  auto listing = sea::list_directory(m->logical, g_rt->config);
  if (!listing) {
    errno = ENOENT;
    return -1;
  }
  // Empty everywhere or not removed anywhere.
  if (!listing->empty()) {
    errno = ENOTEMPTY;
    return -1;
  }
  int rc = 0;
  int err = 0;
  for (const auto& t : g_rt->config.tiers) {
    if (::rmdir(sea::unmask(m->logical, t.priority, g_rt->config).c_str()) != 0 &&
        errno != ENOENT) {
      rc = -1;
      err = errno;
    }
  }
  if (rc != 0) errno = err;
  return rc;
}

namespace {
int unlink_common(const std::string& logical, CallFn fn) {
  wait_not_in_flight(logical);
  auto locs = sea::probe_locations(logical, g_rt->config);
  if (locs.empty()) {
    count(fn, -1);
    errno = ENOENT;
    return -1;
  }
  count(fn, locs.front().tier);
  if (locs.front().is_dir) {
    errno = EISDIR;
    return -1;
  }
  // Deleting a logical file removes every physical copy; a stale survivor
  // would resurrect the file through resolve_read.
  int rc = 0;
  int err = 0;
  for (const auto& l : locs) {
    if (::unlink(sea::unmask(logical, l.tier, g_rt->config).c_str()) != 0 && errno != ENOENT) {
      sea::log_error("unlink %s failed on tier %d: %s", logical.c_str(), l.tier,
                     std::strerror(errno));
      rc = -1;
      err = errno;
    }
  }
  if (rc != 0) errno = err;
  return rc;
}

int rename_common(const std::string& src, const std::string& dst, CallFn fn) {
  wait_not_in_flight(src);
  wait_not_in_flight(dst);
  auto src_locs = sea::probe_locations(src, g_rt->config);
  if (src_locs.empty()) {
    count(fn, -1);
    errno = ENOENT;
    return -1;
  }
  count(fn, src_locs.front().tier);
  std::set<int> src_tiers;
  for (const auto& l : src_locs) src_tiers.insert(l.tier);

  int rc = 0;
  int err = 0;
  for (const auto& t : g_rt->config.tiers) {
    fs::path dstp = sea::unmask(dst, t.priority, g_rt->config);
    if (src_tiers.count(t.priority)) {
      fs::path srcp = sea::unmask(src, t.priority, g_rt->config);
      std::error_code ec;
      fs::create_directories(dstp.parent_path(), ec);
      if (::rename(srcp.c_str(), dstp.c_str()) != 0) {
        sea::log_error("rename %s -> %s failed on tier %d: %s", src.c_str(), dst.c_str(),
                       t.priority, std::strerror(errno));
        rc = -1;
        err = errno;
      }
    } else {
      // A tier holding only the destination name would shadow the renamed
      // file; drop the stale copy (files only).
      struct stat st {};
      if (::lstat(dstp.c_str(), &st) == 0 && !S_ISDIR(st.st_mode)) ::unlink(dstp.c_str());
    }
  }
  if (rc != 0) errno = err;
  return rc;
}
}  // namespace

int do_unlink(const char* path, CallFn fn, bool& handled) {
  auto m = mask(path);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  return unlink_common(m->logical, fn);
}

int do_unlinkat(int dirfd, const char* path, int flags, bool& handled) {
  auto abs = resolve_at(dirfd, path);
  if (!abs) {
    handled = false;
    return -1;
  }
  auto m = sea::mask_path(*abs, g_rt->config);
  if (!m || m->logical.empty()) {
    handled = false;
    return -1;
  }
  handled = true;
  if (flags & AT_REMOVEDIR) {
    bool h2 = true;
    std::string p = *abs;
    return do_rmdir(p.c_str(), h2);
  }
  return unlink_common(m->logical, CallFn::unlinkat);
}

int do_rename(const char* oldp, const char* newp, CallFn fn, bool& handled) {
  auto ms = mask(oldp);
  auto md = mask(newp);
  if (!ms && !md) {
    handled = false;
    return -1;
  }
  handled = true;
  if (!ms || !md || ms->logical.empty() || md->logical.empty()) {
    // One side outside the namespace: no atomic rename can span it.
    count(fn, -1);
    errno = EXDEV;
    return -1;
  }
  return rename_common(ms->logical, md->logical, fn);
}

int do_renameat(int olddirfd, const char* oldp, int newdirfd, const char* newp, bool& handled) {
  auto so = resolve_at(olddirfd, oldp);
  auto sn = resolve_at(newdirfd, newp);
  if (!so || !sn) {
    handled = false;
    return -1;
  }
  auto ms = sea::mask_path(*so, g_rt->config);
  auto md = sea::mask_path(*sn, g_rt->config);
  if (!ms && !md) {
    handled = false;
    return -1;
  }
  handled = true;
  if (!ms || !md || ms->logical.empty() || md->logical.empty()) {
    count(CallFn::renameat, -1);
    errno = EXDEV;
    return -1;
  }
  return rename_common(ms->logical, md->logical, CallFn::renameat);
}

DIR* do_opendir(const char* path, bool& handled) {
  auto m = mask(path);
  if (!m) {
    handled = false;
    return nullptr;
  }
  handled = true;
  count(CallFn::opendir, 0);
  auto listing = sea::list_directory(m->logical, g_rt->config);
  if (!listing) {
    errno = ENOENT;
    return nullptr;
  }
  auto* sd = new SeaDir();
  sd->entries.emplace_back(".", DT_DIR);
  sd->entries.emplace_back("..", DT_DIR);
  for (const auto& e : *listing)
    sd->entries.emplace_back(e.name, e.is_dir ? DT_DIR : DT_REG);
  {
    std::lock_guard<std::mutex> lk(g_dirs_mu);
    g_dirs.insert(sd);
  }
  return reinterpret_cast<DIR*>(sd);
}

bool is_sea_dir(DIR* dirp) {
  if (!dirp) return false;
  std::lock_guard<std::mutex> lk(g_dirs_mu);
  return g_dirs.count(dirp) > 0;
}

namespace {
struct dirent64* fill_entry(SeaDir* sd) {
  if (sd->index >= sd->entries.size()) return nullptr;
  const auto& [name, type] = sd->entries[sd->index++];
  auto* d = &sd->buf64;
  std::memset(d, 0, sizeof(*d));
  d->d_ino = sd->index;  // synthetic; unique within the stream
  d->d_off = static_cast<off64_t>(sd->index);
  d->d_type = type;
  std::snprintf(d->d_name, sizeof(d->d_name), "%s", name.c_str());
  d->d_reclen = sizeof(struct dirent64);
  return d;
}
}  // namespace

struct dirent* sea_readdir(DIR* dirp) {
  auto* sd = reinterpret_cast<SeaDir*>(dirp);
  if (g_rt) g_rt->stats.record(CallFn::readdir, 0, 0, -1, false);
  // On this ABI dirent and dirent64 share a layout.
  return reinterpret_cast<struct dirent*>(fill_entry(sd));
}

struct dirent64* sea_readdir64(DIR* dirp) {
  auto* sd = reinterpret_cast<SeaDir*>(dirp);
  if (g_rt) g_rt->stats.record(CallFn::readdir, 0, 0, -1, false);
  return fill_entry(sd);
}

int sea_closedir(DIR* dirp) {
  {
    std::lock_guard<std::mutex> lk(g_dirs_mu);
    g_dirs.erase(dirp);
  }
  delete reinterpret_cast<SeaDir*>(dirp);
  if (g_rt) g_rt->stats.record(CallFn::closedir, 0, 0, -1, false);
  return 0;
}

void note_close(int fd) {
  std::lock_guard<std::mutex> lk(g_rt->fd_mu);
  auto it = g_rt->fds.find(fd);
  if (it == g_rt->fds.end()) return;
  if (it->second.writer) {
    auto w = g_rt->open_writers.find(it->second.logical);
    if (w != g_rt->open_writers.end() && --w->second <= 0) g_rt->open_writers.erase(w);
  }
  g_rt->stats.record(CallFn::close, 0, 0, it->second.tier,
                     it->second.tier == g_rt->persistent());
  g_rt->fds.erase(it);
}

void note_fclose(FILE* stream) {
  std::lock_guard<std::mutex> lk(g_rt->fd_mu);
  auto sit = g_rt->streams.find(stream);
  if (sit == g_rt->streams.end()) return;
  int fd = sit->second;
  g_rt->streams.erase(sit);
  auto it = g_rt->fds.find(fd);
  if (it == g_rt->fds.end()) return;
  if (it->second.writer) {
    auto w = g_rt->open_writers.find(it->second.logical);
    if (w != g_rt->open_writers.end() && --w->second <= 0) g_rt->open_writers.erase(w);
  }
  g_rt->stats.record(CallFn::fclose, 0, 0, it->second.tier,
                     it->second.tier == g_rt->persistent());
  g_rt->fds.erase(it);
}

bool fd_tier(int fd, int& tier) {
  std::lock_guard<std::mutex> lk(g_rt->fd_mu);
  auto it = g_rt->fds.find(fd);
  if (it == g_rt->fds.end()) return false;
  tier = it->second.tier;
  return true;
}

void count_io(CallFn fn, int fd, ssize_t result, bool is_read) {
  int tier = 0;
  if (!fd_tier(fd, tier)) return;
  std::uint64_t bytes = result > 0 ? static_cast<std::uint64_t>(result) : 0;
  g_rt->stats.record(fn, is_read ? bytes : 0, is_read ? 0 : bytes, tier,
                     tier == g_rt->persistent());
}

void count_fsync(int fd) {
  int tier = 0;
  if (!fd_tier(fd, tier)) return;
  g_rt->stats.record(CallFn::fsync, 0, 0, tier, tier == g_rt->persistent());
}

}  // namespace seashim
