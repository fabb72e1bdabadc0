#pragma once

#include <array>
#include <cstdint>

namespace subdiff {

// One block of the Philox 4x32 counter-based generator, 10 rounds. Pure
// function of (key, counter), which is what makes worker-count-independent
// reproducibility cheap: every draw has an address.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 2> key,
                                           std::array<std::uint32_t, 4> ctr);

// Stream view over one (seed, path, lane) address. Counter layout:
// (path low word, path high word, lane, block index).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t path, std::uint32_t lane);

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  double uniform53();    // strictly inside (0,1)
  double normal();       // standard normal, Box-Muller pair cached
  double exponential();  // unit rate

 private:
  void refill();
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> base_;
  std::array<std::uint32_t, 4> buf_{};
  std::uint32_t block_ = 0;
  int pos_ = 4;
  double cached_normal_ = 0.0;
  bool have_normal_ = false;
};

}  // namespace subdiff
