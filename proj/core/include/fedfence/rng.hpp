#pragma once

#include <initializer_list>
#include <vector>

#include "fedfence/types.hpp"

namespace fedfence {

// Counter-based deterministic generator. Draw i of a stream is
// mix64(key + (i+1) * GAMMA), the splitmix64 sequence, so any value is
// reproducible from (seed, stream ids, counter) alone and output is
// identical across platforms. Streams for different id tuples are
// independent for all practical purposes: ids are folded into the key
// through the same avalanching finalizer.
class SeededRng {
 public:
  explicit SeededRng(u64 seed);

  // Child stream for a purpose/coordinate tuple, e.g. {kMasks, round, shard}.
  // Independent of how many draws the parent has made.
  SeededRng derive(std::initializer_list<u64> ids) const;

  u64 next_u64();
  double next_unit();      // uniform on [0, 1)
  double next_gaussian();  // standard normal, Box-Muller pair cached
  u64 next_below(u64 n);   // uniform on [0, n), unbiased via masked rejection

  // Fisher-Yates with next_below; std::shuffle is avoided because its
  // index distribution is not pinned down across standard libraries.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  static u64 mix64(u64 z);

 private:
  u64 key_ = 0;
  u64 counter_ = 0;
  bool has_cached_gaussian_ = false;
  double cached_gaussian_ = 0.0;
};

// Stream id constants so call sites do not collide by accident.
namespace stream {
inline constexpr u64 kPartition = 1;
inline constexpr u64 kMasks = 2;
inline constexpr u64 kClientData = 3;
inline constexpr u64 kLocalTrain = 4;
inline constexpr u64 kAttack = 5;
inline constexpr u64 kTask = 6;
inline constexpr u64 kIdeal = 7;
inline constexpr u64 kBench = 8;
inline constexpr u64 kInit = 9;
}  // namespace stream

}  // namespace fedfence
