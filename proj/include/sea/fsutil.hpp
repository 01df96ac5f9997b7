#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <system_error>
#include <vector>

namespace sea {

// Names containing this marker are internal movement staging files. They are
// invisible to namespace listings and scans, and must never survive a drain.
inline constexpr const char* kTmpMarker = ".sea_tmp.";

bool is_internal_name(std::string_view filename);

// Free bytes available to unprivileged writers (statvfs f_bavail).
std::uint64_t free_bytes(const std::filesystem::path& dir);

// Streams src into dst via a ".sea_tmp.<pid>.<seq>" sibling and renames it
// into place, so readers of dst's directory never see partial contents.
// Preserves the source mode; preserves mtime only when preserve_mtime is set
// (prefetch copies must not look newer than their origin).
bool copy_file_atomic(const std::filesystem::path& src, const std::filesystem::path& dst,
                      bool preserve_mtime, std::error_code& ec);

// rename() when src and dst share a device, copy+unlink otherwise.
bool move_file(const std::filesystem::path& src, const std::filesystem::path& dst,
               std::error_code& ec);

// All directories under root, as relative paths, lexicographically sorted.
std::vector<std::string> relative_dirs(const std::filesystem::path& root);

// All regular files under root, as relative paths, internal names skipped.
std::vector<std::string> relative_files(const std::filesystem::path& root);

std::string read_text_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, std::string_view content);

}  // namespace sea
