#include "fedfence/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fedfence {

namespace {
constexpr u64 kGamma = 0x9e3779b97f4a7c15ULL;
constexpr u64 kDomain = 0x66656466656e6365ULL;  // "fedfence"
}  // namespace

u64 SeededRng::mix64(u64 z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

SeededRng::SeededRng(u64 seed) : key_(mix64(seed ^ kDomain)) {}

SeededRng SeededRng::derive(std::initializer_list<u64> ids) const {
  SeededRng child(0);
  u64 k = key_;
  for (u64 id : ids) k = mix64(k + kGamma + mix64(id + kGamma));
  child.key_ = k;
  child.counter_ = 0;
  return child;
}

u64 SeededRng::next_u64() {
  counter_ += 1;
  return mix64(key_ + counter_ * kGamma);
}

double SeededRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_gaussian() {
  if (has_cached_gaussian_) {
    has_cached_gaussian_ = false;
    return cached_gaussian_;
  }
  // u1 in (0, 1] keeps the log finite.
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = next_unit();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = r * std::sin(theta);
  has_cached_gaussian_ = true;
  return r * std::cos(theta);
}

u64 SeededRng::next_below(u64 n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
  u64 mask = ~0ULL;
  u64 shift = 64;
  while (shift > 1 && (n - 1) < (1ULL << (shift - 1))) {
    --shift;
    mask >>= 1;
  }
  for (;;) {
    u64 x = next_u64() & mask;
    if (x < n) return x;
  }
}

}  // namespace fedfence
