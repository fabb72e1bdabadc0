#include "subdiff/rng.hpp"

#include <cmath>
#include <numbers>

namespace subdiff {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  std::uint64_t p = std::uint64_t(a) * std::uint64_t(b);
  hi = std::uint32_t(p >> 32);
  lo = std::uint32_t(p);
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 2> key,
                                           std::array<std::uint32_t, 4> ctr) {
  for (int round = 0;; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    if (round == 9) break;
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t path, std::uint32_t lane)
    : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
      base_{std::uint32_t(path), std::uint32_t(path >> 32), lane, 0} {}

void RngStream::refill() {
  auto ctr = base_;
  ctr[3] = block_++;
  buf_ = philox4x32_10(key_, ctr);
  pos_ = 0;
}

std::uint32_t RngStream::next_u32() {
  if (pos_ >= 4) refill();
  return buf_[pos_++];
}

std::uint64_t RngStream::next_u64() {
  std::uint64_t hi = next_u32();
  std::uint64_t lo = next_u32();
  return (hi << 32) | lo;
}

double RngStream::uniform53() {
  std::uint64_t bits = next_u64();
  return (double((bits >> 11)) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (have_normal_) {
    have_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform53();
  double u2 = uniform53();
  double r = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(a);
  have_normal_ = true;
  return r * std::cos(a);
}

double RngStream::exponential() { return -std::log(uniform53()); }

}  // namespace subdiff
