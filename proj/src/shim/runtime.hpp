#pragma once

#include <dirent.h>
#include <sys/stat.h>
#include <sys/types.h>

#include <cstdio>

#include "sea/stats.hpp"

// Interception runtime for the preloaded shared object. Wrappers in
// interpose.cpp forward here once the per-thread reentrancy guard is taken;
// everything in this layer may freely use libc and std::filesystem because
// guarded calls pass straight through to the real functions.
namespace seashim {

// Thread reentrancy flag. While held, wrappers forward to the real libc
// entry points untouched.
bool guard_held();

struct Guard {
  Guard();
  ~Guard();
};

// One-time process initialization; safe to call from any wrapper. Returns
// true when the runtime is active (config loaded, interception on).
bool engaged();

// Called from a destructor at unload: stops background threads (master
// process only) and appends the stats record.
void shutdown();

// Path-based operations. All return the raw syscall result and leave errno
// set; `handled` is false when the path is not a Sea path and the wrapper
// should fall through to the real function.
int do_open(const char* path, int flags, mode_t mode, sea::CallFn fn, bool& handled);
int do_openat(int dirfd, const char* path, int flags, mode_t mode, sea::CallFn fn, bool& handled);
FILE* do_fopen(const char* path, const char* mode, sea::CallFn fn, bool& handled,
               FILE* freopen_stream = nullptr);
int do_stat(const char* path, struct stat* st, bool follow, sea::CallFn fn, bool& handled);
int do_fstatat(int dirfd, const char* path, struct stat* st, int at_flags, bool& handled);
int do_access(const char* path, int amode, bool& handled);
int do_chmod(const char* path, mode_t mode, bool& handled);
int do_truncate(const char* path, off_t length, bool& handled);
int do_mkdir(const char* path, mode_t mode, bool& handled);
int do_mkdirat(int dirfd, const char* path, mode_t mode, bool& handled);
int do_rmdir(const char* path, bool& handled);
int do_unlink(const char* path, sea::CallFn fn, bool& handled);
int do_unlinkat(int dirfd, const char* path, int flags, bool& handled);
int do_rename(const char* oldp, const char* newp, sea::CallFn fn, bool& handled);
int do_renameat(int olddirfd, const char* oldp, int newdirfd, const char* newp, bool& handled);

// Directory streams: Sea directories get a synthetic handle serving the
// union listing; foreign DIR*s are recognized and passed through.
DIR* do_opendir(const char* path, bool& handled);
bool is_sea_dir(DIR* dirp);
struct dirent* sea_readdir(DIR* dirp);
struct dirent64* sea_readdir64(DIR* dirp);
int sea_closedir(DIR* dirp);

// Descriptor bookkeeping for the fd-based wrappers (stats only; the data
// path was fixed at open time).
void note_close(int fd);
void note_fclose(FILE* stream);
bool fd_tier(int fd, int& tier);  // true when fd is tracked
void count_io(sea::CallFn fn, int fd, ssize_t result, bool is_read);
void count_fsync(int fd);

}  // namespace seashim
