#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fedfence/codec.hpp"
#include "fedfence/rng.hpp"
#include "fedfence/stats.hpp"
#include "fedfence/types.hpp"

namespace fedfence {

// Balanced random partition of [n] into p shards; sizes differ by at most 1.
struct ShardPlan {
  std::size_t n = 0;
  std::size_t p = 0;
  std::vector<ShardId> shard_of;            // size n
  std::vector<std::vector<ClientId>> shards;  // size p, members sorted

  std::size_t shard_size(ShardId s) const { return shards.at(s).size(); }
  std::size_t max_shard_size() const;
  void validate() const;  // throws std::invalid_argument on inconsistency
};

ShardPlan partition_shards(std::size_t n, std::size_t p, SeededRng& rng);

// Pairwise masks for every ordered pair inside a shard. One uniform vector
// u_ij is drawn per unordered pair {i, j}, i < j, and u_ji is stored as its
// wrapping negation, so u_ij + u_ji == 0 (mod 2^64) entrywise and the sum
// of every shard's masks vanishes identically.
struct MaskTable {
  std::size_t d = 0;
  std::map<std::pair<ClientId, ClientId>, FieldVector> masks;

  std::size_t entry_count() const { return masks.size(); }
  // Throws std::invalid_argument if any stored pair breaks antisymmetry.
  void validate() const;
};

MaskTable generate_masks(const ShardPlan& plan, std::size_t d, SeededRng& rng);

// encode(update) plus the sum of this client's masks. A client adds the
// mask it shares with each shard peer; the peer holds the negation, so
// per-shard sums telescope to the sum of the encodings.
FieldVector mask_update(const RealVector& update, ClientId client,
                        const MaskTable& table, const FixedPointParams& params,
                        EncodeStats* stats = nullptr);

// What the server sees: masked updates only, never plaintext.
struct ServerTranscript {
  std::size_t n = 0;
  std::size_t d = 0;
  u64 round = 0;
  ShardPlan plan;
  std::vector<FieldVector> masked;  // n rows, each length d

  void validate() const;
};

// Mod-q sum over the shard's rows, decoded with divisor |H|: the exact
// quantized shard mean.
RealVector aggregate_shard(const ServerTranscript& t, ShardId shard,
                           const FixedPointParams& params);
std::vector<RealVector> aggregate_all_shards(const ServerTranscript& t,
                                             const FixedPointParams& params);

// Ideal-world transcript: per shard, |H| - 1 uniform rows plus one residual
// row that forces the mod-q sum to the encoded shard sum.
ServerTranscript simulate_ideal_transcript(
    const ShardPlan& plan, const std::vector<RealVector>& shard_sums,
    const FixedPointParams& params, SeededRng& rng);

// Binary layout (little-endian u64 fields): magic "FSA1", n, d, p, round,
// shard assignment (n entries), masked rows (n * d entries, row-major).
void save_transcript(const ServerTranscript& t, const std::string& path);
ServerTranscript load_transcript(const std::string& path);

// Bins every masked coordinate of `t` into hist (size must be a power of
// two >= 4). The bin index mixes the lowest and highest bits of the value
// (half the bin bits from each end), so bias in either region of the word
// is visible. Accumulates, so histograms can be pooled across transcripts.
void accumulate_value_histogram(const ServerTranscript& t,
                                std::vector<u64>& hist);

// Two-sample chi-square between the masked coordinates of two transcripts.
ChiSquareResult transcript_uniformity_test(const ServerTranscript& real,
                                           const ServerTranscript& ideal,
                                           std::size_t bins = 16);

}  // namespace fedfence
