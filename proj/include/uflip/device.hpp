#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "uflip/common.hpp"

namespace uflip {

// Block device as seen by the benchmark: 512-byte logical sectors, one
// synchronous IO at a time per caller, each call returning its response
// time in microseconds.
class BlockDevice {
 public:
  virtual ~BlockDevice() = default;

  virtual std::uint64_t capacity() const = 0;
  virtual std::string id() const = 0;

  virtual double read(std::uint64_t lba, std::uint64_t size) = 0;
  virtual double write(std::uint64_t lba, std::uint64_t size,
                       std::span<const std::byte> payload = {}) = 0;

  // Let the device sit idle. Real devices sleep; the simulator advances its
  // virtual clock and runs any deferred reclamation.
  virtual void idle(double us) = 0;

  // Simulated devices run on a virtual clock: the runner must not sleep or
  // read wall-clock time for them.
  virtual bool simulated() const = 0;

  // Opaque state image (simulator only).
  virtual std::vector<std::uint8_t> snapshot_state() const {
    fail(ErrorKind::Unsupported, id() + ": state snapshots are not supported");
  }
  virtual void restore_state(std::span<const std::uint8_t>) {
    fail(ErrorKind::Unsupported, id() + ": state restore is not supported");
  }

 protected:
  void check_range(std::uint64_t lba, std::uint64_t size) const {
    if (size == 0 || lba % kSector != 0 || size % kSector != 0)
      fail(ErrorKind::Spec, "IO not aligned to 512-byte sectors: lba=" +
                                std::to_string(lba) + " size=" +
                                std::to_string(size));
    if (lba + size > capacity() || lba + size < lba)
      fail(ErrorKind::Spec, "IO beyond device capacity: lba=" +
                                std::to_string(lba) + " size=" +
                                std::to_string(size));
  }
};

}  // namespace uflip
