#pragma once

#include <string>

#include "uflip/device.hpp"

namespace uflip {

struct RawCapabilities {
  bool direct_io = false;  // O_DIRECT accepted
  bool sync_io = false;    // O_DSYNC accepted
  bool block_device = false;
  std::uint64_t capacity = 0;
  std::uint64_t logical_block_size = kSector;
};

// What the running platform supports for `path`, without writing anything.
RawCapabilities probe_raw(const std::string& path);

// Raw block device (or regular file) opened with O_DIRECT | O_DSYNC so that
// neither the page cache nor write-back buffering hides device behaviour.
// Response times are measured with a monotonic clock around each call.
class RawDevice final : public BlockDevice {
 public:
  struct Options {
    bool require_direct = true;  // fail instead of falling back to buffered IO
    bool writable = true;
  };

  RawDevice(std::string path, Options opts);
  explicit RawDevice(std::string path) : RawDevice(std::move(path), Options{}) {}
  ~RawDevice() override;
  RawDevice(const RawDevice&) = delete;
  RawDevice& operator=(const RawDevice&) = delete;

  std::uint64_t capacity() const override { return capacity_; }
  std::string id() const override { return path_; }
  bool simulated() const override { return false; }
  bool direct() const { return direct_; }

  double read(std::uint64_t lba, std::uint64_t size) override;
  double write(std::uint64_t lba, std::uint64_t size,
               std::span<const std::byte> payload = {}) override;
  void idle(double us) override;

 private:
  std::string path_;
  int fd_ = -1;
  bool direct_ = false;
  std::uint64_t capacity_ = 0;
};

}  // namespace uflip
