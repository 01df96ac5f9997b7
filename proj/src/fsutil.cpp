#include "sea/fsutil.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <sys/statvfs.h>
#include <sys/time.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace sea {

namespace fs = std::filesystem;

bool is_internal_name(std::string_view filename) {
  return filename.find(kTmpMarker) != std::string_view::npos;
}

std::uint64_t free_bytes(const fs::path& dir) {
  struct statvfs vfs {};
  if (::statvfs(dir.c_str(), &vfs) != 0) return 0;
  return static_cast<std::uint64_t>(vfs.f_bavail) * vfs.f_frsize;
}

namespace {
constexpr std::size_t kCopyBufSize = 4 * 1024 * 1024;

fs::path staging_name(const fs::path& dst) {
  static std::atomic<std::uint64_t> seq{0};
  std::string name = dst.filename().string() + kTmpMarker + std::to_string(::getpid()) + "." +
                     std::to_string(seq.fetch_add(1));
  return dst.parent_path() / name;
}
}  // namespace

bool copy_file_atomic(const fs::path& src, const fs::path& dst, bool preserve_mtime,
                      std::error_code& ec) {
  ec.clear();
  int in = ::open(src.c_str(), O_RDONLY | O_CLOEXEC);
  if (in < 0) {
    ec = std::error_code(errno, std::generic_category());
    return false;
  }
  struct stat st {};
  if (::fstat(in, &st) != 0) {
    ec = std::error_code(errno, std::generic_category());
    ::close(in);
    return false;
  }

  fs::create_directories(dst.parent_path(), ec);
  if (ec) {
    ::close(in);
    return false;
  }

  fs::path tmp = staging_name(dst);
  int out = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, st.st_mode & 07777);
  if (out < 0) {
    ec = std::error_code(errno, std::generic_category());
    ::close(in);
    return false;
  }

  std::vector<char> buf(kCopyBufSize);
  bool ok = true;
  for (;;) {
    ssize_t n = ::read(in, buf.data(), buf.size());
    if (n == 0) break;
    if (n < 0) {
      if (errno == EINTR) continue;
      ec = std::error_code(errno, std::generic_category());
      ok = false;
      break;
    }
    ssize_t off = 0;
    while (off < n) {
      ssize_t w = ::write(out, buf.data() + off, static_cast<std::size_t>(n - off));
      if (w < 0) {
        if (errno == EINTR) continue;
        ec = std::error_code(errno, std::generic_category());
        ok = false;
        break;
      }
      off += w;
    }
    if (!ok) break;
  }
  ::close(in);

  if (ok && preserve_mtime) {
    struct timespec times[2] = {st.st_atim, st.st_mtim};
    if (::futimens(out, times) != 0) {
      ec = std::error_code(errno, std::generic_category());
      ok = false;
    }
  }
  if (::close(out) != 0 && ok) {
    ec = std::error_code(errno, std::generic_category());
    ok = false;
  }

  if (ok && ::rename(tmp.c_str(), dst.c_str()) != 0) {
    ec = std::error_code(errno, std::generic_category());
    ok = false;
  }
  if (!ok) ::unlink(tmp.c_str());
  return ok;
}

bool move_file(const fs::path& src, const fs::path& dst, std::error_code& ec) {
  ec.clear();
  fs::create_directories(dst.parent_path(), ec);
  if (ec) return false;
  if (::rename(src.c_str(), dst.c_str()) == 0) return true;
  if (errno != EXDEV) {
    ec = std::error_code(errno, std::generic_category());
    return false;
  }
  if (!copy_file_atomic(src, dst, /*preserve_mtime=*/false, ec)) return false;
  if (::unlink(src.c_str()) != 0) {
    ec = std::error_code(errno, std::generic_category());
    return false;
  }
  return true;
}

std::vector<std::string> relative_dirs(const fs::path& root) {
  std::vector<std::string> out;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (it->is_directory(ec)) out.push_back(it->path().lexically_relative(root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::string> relative_files(const fs::path& root) {
  std::vector<std::string> out;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(root, ec);
       it != fs::recursive_directory_iterator(); it.increment(ec)) {
    if (ec) break;
    if (!it->is_regular_file(ec)) continue;
    if (is_internal_name(it->path().filename().string())) continue;
    out.push_back(it->path().lexically_relative(root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& p, std::string_view content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

}  // namespace sea
