#include "sea/stats.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <sstream>

namespace sea {

const char* call_fn_name(CallFn fn) {
  switch (fn) {
    case CallFn::open: return "open";
    case CallFn::openat: return "openat";
    case CallFn::creat: return "creat";
    case CallFn::fopen: return "fopen";
    case CallFn::freopen: return "freopen";
    case CallFn::close: return "close";
    case CallFn::fclose: return "fclose";
    case CallFn::read: return "read";
    case CallFn::pread: return "pread";
    case CallFn::readv: return "readv";
    case CallFn::write: return "write";
    case CallFn::pwrite: return "pwrite";
    case CallFn::writev: return "writev";
    case CallFn::stat_: return "stat";
    case CallFn::lstat: return "lstat";
    case CallFn::fstatat: return "fstatat";
    case CallFn::access: return "access";
    case CallFn::chmod: return "chmod";
    case CallFn::truncate: return "truncate";
    case CallFn::fsync: return "fsync";
    case CallFn::rename_: return "rename";
    case CallFn::renameat: return "renameat";
    case CallFn::unlink: return "unlink";
    case CallFn::unlinkat: return "unlinkat";
    case CallFn::mkdir: return "mkdir";
    case CallFn::mkdirat: return "mkdirat";
    case CallFn::rmdir: return "rmdir";
    case CallFn::opendir: return "opendir";
    case CallFn::readdir: return "readdir";
    case CallFn::closedir: return "closedir";
    case CallFn::kCount: break;
  }
  return "?";
}

std::uint64_t CallStats::total_calls() const {
  std::uint64_t sum = 0;
  for (const auto& c : per_fn_) sum += c.load(std::memory_order_relaxed);
  return sum;
}

std::string CallStats::to_line() const {
  std::ostringstream out;
  out << "pid=" << ::getpid();
  out << " total_calls=" << total_calls();
  out << " slow_tier_calls=" << slow_tier_calls();
  out << " bytes_read=" << bytes_read();
  out << " bytes_written=" << bytes_written();
  for (int t = 0; t < kMaxTiers; ++t) {
    if (auto v = tier_read_[t].load()) out << " tier" << t << ".bytes_read=" << v;
    if (auto v = tier_written_[t].load()) out << " tier" << t << ".bytes_written=" << v;
  }
  for (int i = 0; i < static_cast<int>(CallFn::kCount); ++i) {
    if (auto v = per_fn_[i].load())
      out << " call." << call_fn_name(static_cast<CallFn>(i)) << "=" << v;
  }
  return out.str();
}

StatsRecord parse_stats_line(const std::string& line) {
  StatsRecord rec;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    size_t eq = tok.find('=');
    if (eq == std::string::npos) continue;
    try {
      rec[tok.substr(0, eq)] = std::stoull(tok.substr(eq + 1));
    } catch (const std::exception&) {
    }
  }
  return rec;
}

StatsRecord aggregate_stats_file(const std::filesystem::path& path) {
  StatsRecord total;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    for (const auto& [k, v] : parse_stats_line(line)) {
      if (k == "pid") continue;
      total[k] += v;
    }
  }
  return total;
}

bool append_record_line(const std::filesystem::path& path, const std::string& line) {
  int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) return false;
  std::string rec = line + "\n";
  ssize_t n = ::write(fd, rec.data(), rec.size());
  ::close(fd);
  return n == static_cast<ssize_t>(rec.size());
}

}  // namespace sea
