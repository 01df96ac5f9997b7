#include "sea/log.hpp"

#include <atomic>
#include <cstdio>

namespace sea {

namespace {
std::atomic<LogLevel> g_level{LogLevel::info};

void vlog(const char* tag, const char* fmt, va_list ap) {
  char buf[1024];
  std::vsnprintf(buf, sizeof(buf), fmt, ap);
  std::fprintf(stderr, "sea:%s %s\n", tag, buf);
  std::fflush(stderr);
}
}  // namespace

void set_log_level(LogLevel level) { g_level.store(level, std::memory_order_relaxed); }
LogLevel log_level() { return g_level.load(std::memory_order_relaxed); }

void log_error(const char* fmt, ...) {
  if (log_level() < LogLevel::error) return;
  va_list ap;
  va_start(ap, fmt);
  vlog(" error:", fmt, ap);
  va_end(ap);
}

void log_info(const char* fmt, ...) {
  if (log_level() < LogLevel::info) return;
  va_list ap;
  va_start(ap, fmt);
  vlog("", fmt, ap);
  va_end(ap);
}

void log_debug(const char* fmt, ...) {
  if (log_level() < LogLevel::debug) return;
  va_list ap;
  va_start(ap, fmt);
  vlog(" debug:", fmt, ap);
  va_end(ap);
}

}  // namespace sea
