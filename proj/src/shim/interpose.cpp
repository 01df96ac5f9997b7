// The preloaded entry points. Each wrapper takes the per-thread guard, asks
// the runtime to handle Sea paths, and otherwise forwards to the next symbol
// in link order. Wrappers never allocate before the guard check so internal
// libc use (including our own) passes through untouched.

#include <dirent.h>
#include <dlfcn.h>
#include <fcntl.h>
#include <stdarg.h>
#include <stdio.h>
#include <sys/stat.h>
#include <sys/uio.h>
#include <unistd.h>

#include <cerrno>

#include "runtime.hpp"

using sea::CallFn;

namespace {

template <typename Fn>
Fn resolve(Fn& cache, const char* name) {
  if (!cache) cache = reinterpret_cast<Fn>(::dlsym(RTLD_NEXT, name));
  return cache;
}

using open_fn = int (*)(const char*, int, ...);
using openat_fn = int (*)(int, const char*, int, ...);
using creat_fn = int (*)(const char*, mode_t);
using fopen_fn = FILE* (*)(const char*, const char*);
using freopen_fn = FILE* (*)(const char*, const char*, FILE*);
using close_fn = int (*)(int);
using fclose_fn = int (*)(FILE*);
using read_fn = ssize_t (*)(int, void*, size_t);
using write_fn = ssize_t (*)(int, const void*, size_t);
using pread_fn = ssize_t (*)(int, void*, size_t, off_t);
using pwrite_fn = ssize_t (*)(int, const void*, size_t, off_t);
using pread64_fn = ssize_t (*)(int, void*, size_t, off64_t);
using pwrite64_fn = ssize_t (*)(int, const void*, size_t, off64_t);
using readv_fn = ssize_t (*)(int, const struct iovec*, int);
using writev_fn = ssize_t (*)(int, const struct iovec*, int);
using stat_fn = int (*)(const char*, struct stat*);
using stat64_fn = int (*)(const char*, struct stat64*);
using fstatat_fn = int (*)(int, const char*, struct stat*, int);
using fstatat64_fn = int (*)(int, const char*, struct stat64*, int);
using access_fn = int (*)(const char*, int);
using chmod_fn = int (*)(const char*, mode_t);
using truncate_fn = int (*)(const char*, off_t);
using truncate64_fn = int (*)(const char*, off64_t);
using fsync_fn = int (*)(int);
using rename_fn = int (*)(const char*, const char*);
using renameat_fn = int (*)(int, const char*, int, const char*);
using renameat2_fn = int (*)(int, const char*, int, const char*, unsigned int);
using unlink_fn = int (*)(const char*);
using unlinkat_fn = int (*)(int, const char*, int);
using mkdir_fn = int (*)(const char*, mode_t);
using mkdirat_fn = int (*)(int, const char*, mode_t);
using rmdir_fn = int (*)(const char*);
using opendir_fn = DIR* (*)(const char*);
using readdir_fn = struct dirent* (*)(DIR*);
using readdir64_fn = struct dirent64* (*)(DIR*);
using closedir_fn = int (*)(DIR*);

open_fn p_open, p_open64;
openat_fn p_openat, p_openat64;
creat_fn p_creat, p_creat64;
fopen_fn p_fopen, p_fopen64;
freopen_fn p_freopen, p_freopen64;
close_fn p_close;
fclose_fn p_fclose;
read_fn p_read;
write_fn p_write;
pread_fn p_pread;
pwrite_fn p_pwrite;
pread64_fn p_pread64;
pwrite64_fn p_pwrite64;
readv_fn p_readv;
writev_fn p_writev;
stat_fn p_stat, p_lstat;
stat64_fn p_stat64, p_lstat64;
fstatat_fn p_fstatat;
fstatat64_fn p_fstatat64;
access_fn p_access;
chmod_fn p_chmod;
truncate_fn p_truncate;
truncate64_fn p_truncate64;
fsync_fn p_fsync;
rename_fn p_rename;
renameat_fn p_renameat;
renameat2_fn p_renameat2;
unlink_fn p_unlink;
unlinkat_fn p_unlinkat;
mkdir_fn p_mkdir;
mkdirat_fn p_mkdirat;
rmdir_fn p_rmdir;
opendir_fn p_opendir;
readdir_fn p_readdir;
readdir64_fn p_readdir64;
closedir_fn p_closedir;

inline bool bypass() { return seashim::guard_held() || !seashim::engaged(); }

inline mode_t open_mode(int flags, va_list& ap) {
  if (flags & (O_CREAT | O_TMPFILE)) return va_arg(ap, mode_t);
  return 0;
}

}  // namespace

extern "C" {

// ---- open family ----------------------------------------------------------

int open(const char* path, int flags, ...) {
  va_list ap;
  va_start(ap, flags);
  mode_t mode = open_mode(flags, ap);
  va_end(ap);
  if (bypass()) return resolve(p_open, "open")(path, flags, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_open(path, flags, mode, CallFn::open, handled);
  if (handled) return r;
  return resolve(p_open, "open")(path, flags, mode);
}

int open64(const char* path, int flags, ...) {
  va_list ap;
  va_start(ap, flags);
  mode_t mode = open_mode(flags, ap);
  va_end(ap);
  if (bypass()) return resolve(p_open64, "open64")(path, flags, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_open(path, flags | O_LARGEFILE, mode, CallFn::open, handled);
  if (handled) return r;
  return resolve(p_open64, "open64")(path, flags, mode);
}

int openat(int dirfd, const char* path, int flags, ...) {
  va_list ap;
  va_start(ap, flags);
  mode_t mode = open_mode(flags, ap);
  va_end(ap);
  if (bypass()) return resolve(p_openat, "openat")(dirfd, path, flags, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_openat(dirfd, path, flags, mode, CallFn::openat, handled);
  if (handled) return r;
  return resolve(p_openat, "openat")(dirfd, path, flags, mode);
}

int openat64(int dirfd, const char* path, int flags, ...) {
  va_list ap;
  va_start(ap, flags);
  mode_t mode = open_mode(flags, ap);
  va_end(ap);
  if (bypass()) return resolve(p_openat64, "openat64")(dirfd, path, flags, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_openat(dirfd, path, flags | O_LARGEFILE, mode, CallFn::openat, handled);
  if (handled) return r;
  return resolve(p_openat64, "openat64")(dirfd, path, flags, mode);
}

int creat(const char* path, mode_t mode) {
  if (bypass()) return resolve(p_creat, "creat")(path, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_open(path, O_WRONLY | O_CREAT | O_TRUNC, mode, CallFn::creat, handled);
  if (handled) return r;
  return resolve(p_creat, "creat")(path, mode);
}

int creat64(const char* path, mode_t mode) {
  if (bypass()) return resolve(p_creat64, "creat64")(path, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_open(path, O_WRONLY | O_CREAT | O_TRUNC | O_LARGEFILE, mode, CallFn::creat,
                           handled);
  if (handled) return r;
  return resolve(p_creat64, "creat64")(path, mode);
}

FILE* fopen(const char* path, const char* mode) {
  if (bypass()) return resolve(p_fopen, "fopen")(path, mode);
  seashim::Guard g;
  bool handled = false;
  FILE* f = seashim::do_fopen(path, mode, CallFn::fopen, handled);
  if (handled) return f;
  return resolve(p_fopen, "fopen")(path, mode);
}

FILE* fopen64(const char* path, const char* mode) {
  if (bypass()) return resolve(p_fopen64, "fopen64")(path, mode);
  seashim::Guard g;
  bool handled = false;
  FILE* f = seashim::do_fopen(path, mode, CallFn::fopen, handled);
  if (handled) return f;
  return resolve(p_fopen64, "fopen64")(path, mode);
}

FILE* freopen(const char* path, const char* mode, FILE* stream) {
  if (bypass()) return resolve(p_freopen, "freopen")(path, mode, stream);
  seashim::Guard g;
  seashim::note_fclose(stream);
  bool handled = false;
  FILE* f = seashim::do_fopen(path, mode, CallFn::freopen, handled, stream);
  if (handled) return f;
  return resolve(p_freopen, "freopen")(path, mode, stream);
}

FILE* freopen64(const char* path, const char* mode, FILE* stream) {
  if (bypass()) return resolve(p_freopen64, "freopen64")(path, mode, stream);
  seashim::Guard g;
  seashim::note_fclose(stream);
  bool handled = false;
  FILE* f = seashim::do_fopen(path, mode, CallFn::freopen, handled, stream);
  if (handled) return f;
  return resolve(p_freopen64, "freopen64")(path, mode, stream);
}

// ---- descriptor lifecycle --------------------------------------------------

int close(int fd) {
  if (!seashim::guard_held() && seashim::engaged()) {
    seashim::Guard g;
    seashim::note_close(fd);
  }
  return resolve(p_close, "close")(fd);
}

int fclose(FILE* stream) {
  if (!seashim::guard_held() && seashim::engaged()) {
    seashim::Guard g;
    seashim::note_fclose(stream);
  }
  return resolve(p_fclose, "fclose")(stream);
}

// ---- data plane (stats only; redirection happened at open) -----------------

ssize_t read(int fd, void* buf, size_t count) {
  ssize_t r = resolve(p_read, "read")(fd, buf, count);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::read, fd, r, true);
    errno = saved;
  }
  return r;
}

ssize_t write(int fd, const void* buf, size_t count) {
  ssize_t r = resolve(p_write, "write")(fd, buf, count);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::write, fd, r, false);
    errno = saved;
  }
  return r;
}

ssize_t pread(int fd, void* buf, size_t count, off_t off) {
  ssize_t r = resolve(p_pread, "pread")(fd, buf, count, off);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::pread, fd, r, true);
    errno = saved;
  }
  return r;
}

ssize_t pwrite(int fd, const void* buf, size_t count, off_t off) {
  ssize_t r = resolve(p_pwrite, "pwrite")(fd, buf, count, off);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::pwrite, fd, r, false);
    errno = saved;
  }
  return r;
}

ssize_t pread64(int fd, void* buf, size_t count, off64_t off) {
  ssize_t r = resolve(p_pread64, "pread64")(fd, buf, count, off);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::pread, fd, r, true);
    errno = saved;
  }
  return r;
}

ssize_t pwrite64(int fd, const void* buf, size_t count, off64_t off) {
  ssize_t r = resolve(p_pwrite64, "pwrite64")(fd, buf, count, off);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::pwrite, fd, r, false);
    errno = saved;
  }
  return r;
}

ssize_t readv(int fd, const struct iovec* iov, int iovcnt) {
  ssize_t r = resolve(p_readv, "readv")(fd, iov, iovcnt);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::readv, fd, r, true);
    errno = saved;
  }
  return r;
}

ssize_t writev(int fd, const struct iovec* iov, int iovcnt) {
  ssize_t r = resolve(p_writev, "writev")(fd, iov, iovcnt);
  if (!seashim::guard_held() && seashim::engaged()) {
    int saved = errno;
    seashim::Guard g;
    seashim::count_io(CallFn::writev, fd, r, false);
    errno = saved;
  }
  return r;
}

int fsync(int fd) {
  if (!seashim::guard_held() && seashim::engaged()) {
    seashim::Guard g;
    seashim::count_fsync(fd);
  }
  return resolve(p_fsync, "fsync")(fd);
}

// ---- metadata ---------------------------------------------------------------

int stat(const char* path, struct stat* st) __THROW {
  if (bypass()) return resolve(p_stat, "stat")(path, st);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_stat(path, st, true, CallFn::stat_, handled);
  if (handled) return r;
  return resolve(p_stat, "stat")(path, st);
}

int lstat(const char* path, struct stat* st) __THROW {
  if (bypass()) return resolve(p_lstat, "lstat")(path, st);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_stat(path, st, false, CallFn::lstat, handled);
  if (handled) return r;
  return resolve(p_lstat, "lstat")(path, st);
}

int stat64(const char* path, struct stat64* st) __THROW {
  if (bypass()) return resolve(p_stat64, "stat64")(path, st);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_stat(path, reinterpret_cast<struct stat*>(st), true, CallFn::stat_, handled);
  if (handled) return r;
  return resolve(p_stat64, "stat64")(path, st);
}

int lstat64(const char* path, struct stat64* st) __THROW {
  if (bypass()) return resolve(p_lstat64, "lstat64")(path, st);
  seashim::Guard g;
  bool handled = false;
  int r =
      seashim::do_stat(path, reinterpret_cast<struct stat*>(st), false, CallFn::lstat, handled);
  if (handled) return r;
  return resolve(p_lstat64, "lstat64")(path, st);
}

int fstatat(int dirfd, const char* path, struct stat* st, int flags) __THROW {
  if (bypass()) return resolve(p_fstatat, "fstatat")(dirfd, path, st, flags);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_fstatat(dirfd, path, st, flags, handled);
  if (handled) return r;
  return resolve(p_fstatat, "fstatat")(dirfd, path, st, flags);
}

int fstatat64(int dirfd, const char* path, struct stat64* st, int flags) __THROW {
  if (bypass()) return resolve(p_fstatat64, "fstatat64")(dirfd, path, st, flags);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_fstatat(dirfd, path, reinterpret_cast<struct stat*>(st), flags, handled);
  if (handled) return r;
  return resolve(p_fstatat64, "fstatat64")(dirfd, path, st, flags);
}

// Pre-2.33 binaries reach stat through these.
int __xstat(int ver, const char* path, struct stat* st) {
  (void)ver;
  return stat(path, st);
}

int __lxstat(int ver, const char* path, struct stat* st) {
  (void)ver;
  return lstat(path, st);
}

int __xstat64(int ver, const char* path, struct stat64* st) {
  (void)ver;
  return stat64(path, st);
}

int __lxstat64(int ver, const char* path, struct stat64* st) {
  (void)ver;
  return lstat64(path, st);
}

int access(const char* path, int amode) __THROW {
  if (bypass()) return resolve(p_access, "access")(path, amode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_access(path, amode, handled);
  if (handled) return r;
  return resolve(p_access, "access")(path, amode);
}

int chmod(const char* path, mode_t mode) __THROW {
  if (bypass()) return resolve(p_chmod, "chmod")(path, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_chmod(path, mode, handled);
  if (handled) return r;
  return resolve(p_chmod, "chmod")(path, mode);
}

int truncate(const char* path, off_t length) __THROW {
  if (bypass()) return resolve(p_truncate, "truncate")(path, length);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_truncate(path, length, handled);
  if (handled) return r;
  return resolve(p_truncate, "truncate")(path, length);
}

int truncate64(const char* path, off64_t length) __THROW {
  if (bypass()) return resolve(p_truncate64, "truncate64")(path, length);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_truncate(path, static_cast<off_t>(length), handled);
  if (handled) return r;
  return resolve(p_truncate64, "truncate64")(path, length);
}

// ---- namespace structure ----------------------------------------------------

int rename(const char* oldp, const char* newp) __THROW {
  if (bypass()) return resolve(p_rename, "rename")(oldp, newp);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_rename(oldp, newp, CallFn::rename_, handled);
  if (handled) return r;
  return resolve(p_rename, "rename")(oldp, newp);
}

int renameat(int olddirfd, const char* oldp, int newdirfd, const char* newp) __THROW {
  if (bypass()) return resolve(p_renameat, "renameat")(olddirfd, oldp, newdirfd, newp);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_renameat(olddirfd, oldp, newdirfd, newp, handled);
  if (handled) return r;
  return resolve(p_renameat, "renameat")(olddirfd, oldp, newdirfd, newp);
}

int renameat2(int olddirfd, const char* oldp, int newdirfd, const char* newp,
              unsigned int flags) __THROW {
  if (bypass() || flags != 0)
    return resolve(p_renameat2, "renameat2")(olddirfd, oldp, newdirfd, newp, flags);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_renameat(olddirfd, oldp, newdirfd, newp, handled);
  if (handled) return r;
  return resolve(p_renameat2, "renameat2")(olddirfd, oldp, newdirfd, newp, flags);
}

int unlink(const char* path) __THROW {
  if (bypass()) return resolve(p_unlink, "unlink")(path);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_unlink(path, CallFn::unlink, handled);
  if (handled) return r;
  return resolve(p_unlink, "unlink")(path);
}

int unlinkat(int dirfd, const char* path, int flags) __THROW {
  if (bypass()) return resolve(p_unlinkat, "unlinkat")(dirfd, path, flags);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_unlinkat(dirfd, path, flags, handled);
  if (handled) return r;
  return resolve(p_unlinkat, "unlinkat")(dirfd, path, flags);
}

int mkdir(const char* path, mode_t mode) __THROW {
  if (bypass()) return resolve(p_mkdir, "mkdir")(path, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_mkdir(path, mode, handled);
  if (handled) return r;
  return resolve(p_mkdir, "mkdir")(path, mode);
}

int mkdirat(int dirfd, const char* path, mode_t mode) __THROW {
  if (bypass()) return resolve(p_mkdirat, "mkdirat")(dirfd, path, mode);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_mkdirat(dirfd, path, mode, handled);
  if (handled) return r;
  return resolve(p_mkdirat, "mkdirat")(dirfd, path, mode);
}

int rmdir(const char* path) __THROW {
  if (bypass()) return resolve(p_rmdir, "rmdir")(path);
  seashim::Guard g;
  bool handled = false;
  int r = seashim::do_rmdir(path, handled);
  if (handled) return r;
  return resolve(p_rmdir, "rmdir")(path);
}

// ---- directory streams ------------------------------------------------------

DIR* opendir(const char* path) {
  if (bypass()) return resolve(p_opendir, "opendir")(path);
  seashim::Guard g;
  bool handled = false;
  DIR* d = seashim::do_opendir(path, handled);
  if (handled) return d;
  return resolve(p_opendir, "opendir")(path);
}

struct dirent* readdir(DIR* dirp) {
  if (!seashim::guard_held() && seashim::engaged()) {
    seashim::Guard g;
    if (seashim::is_sea_dir(dirp)) return seashim::sea_readdir(dirp);
  }
  return resolve(p_readdir, "readdir")(dirp);
}

struct dirent64* readdir64(DIR* dirp) {
  if (!seashim::guard_held() && seashim::engaged()) {
    seashim::Guard g;
    if (seashim::is_sea_dir(dirp)) return seashim::sea_readdir64(dirp);
  }
  return resolve(p_readdir64, "readdir64")(dirp);
}

int closedir(DIR* dirp) {
  if (!seashim::guard_held() && seashim::engaged()) {
    seashim::Guard g;
    if (seashim::is_sea_dir(dirp)) return seashim::sea_closedir(dirp);
  }
  return resolve(p_closedir, "closedir")(dirp);
}

}  // extern "C"

__attribute__((constructor)) static void sea_shim_ctor() {
  if (!seashim::guard_held()) seashim::engaged();
}

__attribute__((destructor)) static void sea_shim_dtor() { seashim::shutdown(); }
