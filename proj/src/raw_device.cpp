#include "uflip/raw_device.hpp"

#include <fcntl.h>
#include <linux/fs.h>
#include <sys/ioctl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>

namespace uflip {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kAlign = 4096;

std::string errno_text(const std::string& what, const std::string& path) {
  return what + " " + path + ": " + std::strerror(errno);
}

// Per-thread aligned IO buffer, grown on demand. Allocation happens before
// the clock starts.
std::byte* io_buffer(std::uint64_t size) {
  struct Holder {
    void* p = nullptr;
    std::uint64_t n = 0;
    ~Holder() { std::free(p); }
  };
  thread_local Holder h;
  if (h.n < size) {
    std::free(h.p);
    h.p = nullptr;
    h.n = 0;
    const std::uint64_t n = (size + kAlign - 1) / kAlign * kAlign;
    if (posix_memalign(&h.p, kAlign, n) != 0)
      fail(ErrorKind::Io, "cannot allocate aligned IO buffer");
    std::memset(h.p, 0, n);
    h.n = n;
  }
  return static_cast<std::byte*>(h.p);
}

std::uint64_t size_of(int fd, const struct stat& st, bool& block) {
  block = S_ISBLK(st.st_mode);
  if (!block) return static_cast<std::uint64_t>(st.st_size);
  std::uint64_t bytes = 0;
  if (ioctl(fd, BLKGETSIZE64, &bytes) != 0) return 0;
  return bytes;
}

double elapsed_us(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double, std::micro>(b - a).count();
}

}  // namespace

RawCapabilities probe_raw(const std::string& path) {
  RawCapabilities caps;
  int fd = ::open(path.c_str(), O_RDONLY | O_DIRECT);
  if (fd >= 0) {
    caps.direct_io = true;
  } else {
    fd = ::open(path.c_str(), O_RDONLY);
    if (fd < 0) fail(ErrorKind::Io, errno_text("cannot open", path));
  }
  struct stat st {};
  if (fstat(fd, &st) != 0) {
    ::close(fd);
    fail(ErrorKind::Io, errno_text("cannot stat", path));
  }
  caps.capacity = size_of(fd, st, caps.block_device);
  if (caps.block_device) {
    int lbs = 0;
    if (ioctl(fd, BLKSSZGET, &lbs) == 0 && lbs > 0)
      caps.logical_block_size = static_cast<std::uint64_t>(lbs);
  }
  ::close(fd);
  const int sfd = ::open(path.c_str(), O_RDONLY | O_DSYNC);
  if (sfd >= 0) {
    caps.sync_io = true;
    ::close(sfd);
  }
  if (caps.direct_io) {
    // Some filesystems accept O_DIRECT at open time and reject the IO.
    const int dfd = ::open(path.c_str(), O_RDONLY | O_DIRECT);
    if (dfd >= 0) {
      if (caps.capacity >= kAlign &&
          ::pread(dfd, io_buffer(kAlign), kAlign, 0) != static_cast<ssize_t>(kAlign))
        caps.direct_io = false;
      ::close(dfd);
    }
  }
  return caps;
}

RawDevice::RawDevice(std::string path, Options opts) : path_(std::move(path)) {
  const int access = opts.writable ? O_RDWR : O_RDONLY;
  fd_ = ::open(path_.c_str(), access | O_DIRECT | O_DSYNC);
  direct_ = fd_ >= 0;
  if (fd_ < 0) {
    if (errno != EINVAL || opts.require_direct)
      fail(errno == EINVAL ? ErrorKind::Unsupported : ErrorKind::Io,
           errno_text("cannot open for direct IO", path_));
    fd_ = ::open(path_.c_str(), access | O_DSYNC);
    if (fd_ < 0) fail(ErrorKind::Io, errno_text("cannot open", path_));
  }
  struct stat st {};
  if (fstat(fd_, &st) != 0) {
    ::close(fd_);
    fail(ErrorKind::Io, errno_text("cannot stat", path_));
  }
  bool block = false;
  capacity_ = size_of(fd_, st, block) / kSector * kSector;
  if (capacity_ == 0) {
    ::close(fd_);
    fail(ErrorKind::Io, "device has zero capacity: " + path_);
  }
}

RawDevice::~RawDevice() {
  if (fd_ >= 0) ::close(fd_);
}

double RawDevice::read(std::uint64_t lba, std::uint64_t size) {
  check_range(lba, size);
  std::byte* buf = io_buffer(size);
  const auto t0 = Clock::now();
  const ssize_t n = ::pread(fd_, buf, size, static_cast<off_t>(lba));
  const auto t1 = Clock::now();
  if (n != static_cast<ssize_t>(size))
    fail(ErrorKind::Io, errno_text("read failed at " + std::to_string(lba) + " on", path_));
  return elapsed_us(t0, t1);
}

double RawDevice::write(std::uint64_t lba, std::uint64_t size,
                        std::span<const std::byte> payload) {
  check_range(lba, size);
  std::byte* buf = io_buffer(size);
  if (!payload.empty())
    std::memcpy(buf, payload.data(), std::min<std::uint64_t>(payload.size(), size));
  const auto t0 = Clock::now();
  const ssize_t n = ::pwrite(fd_, buf, size, static_cast<off_t>(lba));
  const auto t1 = Clock::now();
  if (n != static_cast<ssize_t>(size))
    fail(ErrorKind::Io, errno_text("write failed at " + std::to_string(lba) + " on", path_));
  return elapsed_us(t0, t1);
}

void RawDevice::idle(double us) {
  if (us <= 0) return;
  const auto deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double, std::micro>(us));
  // Sleep for the bulk, spin for the last two milliseconds.
  const auto coarse = deadline - std::chrono::milliseconds(2);
  if (Clock::now() < coarse) std::this_thread::sleep_until(coarse);
  while (Clock::now() < deadline) {
  }
}

}  // namespace uflip
