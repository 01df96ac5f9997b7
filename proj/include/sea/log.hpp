#pragma once

#include <cstdarg>

namespace sea {

enum class LogLevel { off = 0, error = 1, info = 2, debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();

// All output goes to stderr, prefixed "sea:". The shim shares this logger,
// so implementations must not allocate on the error path.
void log_error(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void log_info(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void log_debug(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

}  // namespace sea
