#include "fedfence/secure_agg.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace fedfence {

std::size_t ShardPlan::max_shard_size() const {
  std::size_t m = 0;
  for (const auto& s : shards) m = std::max(m, s.size());
  return m;
}

void ShardPlan::validate() const {
  if (p == 0 || n < p)
    throw std::invalid_argument("ShardPlan: need 1 <= p <= n");
  if (shard_of.size() != n || shards.size() != p)
    throw std::invalid_argument("ShardPlan: size mismatch");
  std::size_t lo = n, hi = 0, total = 0;
  for (ShardId s = 0; s < p; ++s) {
    const auto& members = shards[s];
    if (!std::is_sorted(members.begin(), members.end()))
      throw std::invalid_argument("ShardPlan: members not sorted");
    for (ClientId c : members) {
      if (c >= n || shard_of[c] != s)
        throw std::invalid_argument("ShardPlan: inconsistent assignment");
    }
    lo = std::min(lo, members.size());
    hi = std::max(hi, members.size());
    total += members.size();
  }
  if (total != n)
    throw std::invalid_argument("ShardPlan: not a partition");
  if (hi - lo > 1)
    throw std::invalid_argument("ShardPlan: shard sizes differ by more than 1");
}

ShardPlan partition_shards(std::size_t n, std::size_t p, SeededRng& rng) {
  if (p == 0 || n < p)
    throw std::invalid_argument("partition_shards: need 1 <= p <= n");
  std::vector<ClientId> order(n);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  ShardPlan plan;
  plan.n = n;
  plan.p = p;
  plan.shard_of.assign(n, 0);
  plan.shards.assign(p, {});
  const std::size_t base = n / p;
  const std::size_t extra = n % p;  // first `extra` shards get one more
  std::size_t pos = 0;
  for (ShardId s = 0; s < p; ++s) {
    std::size_t size = base + (s < extra ? 1 : 0);
    auto& members = plan.shards[s];
    members.assign(order.begin() + pos, order.begin() + pos + size);
    pos += size;
    std::sort(members.begin(), members.end());
    for (ClientId c : members) plan.shard_of[c] = s;
  }
  plan.validate();
  return plan;
}

void MaskTable::validate() const {
  for (const auto& [key, u_ij] : masks) {
    auto it = masks.find({key.second, key.first});
    if (it == masks.end())
      throw std::invalid_argument("MaskTable: missing reverse pair");
    const FieldVector& u_ji = it->second;
    if (u_ij.size() != d || u_ji.size() != d)
      throw std::invalid_argument("MaskTable: dimension mismatch");
    for (std::size_t k = 0; k < d; ++k) {
      if (u_ij[k] + u_ji[k] != 0ULL)
        throw std::invalid_argument("MaskTable: antisymmetry violated");
    }
  }
}

MaskTable generate_masks(const ShardPlan& plan, std::size_t d, SeededRng& rng) {
  MaskTable table;
  table.d = d;
  for (const auto& members : plan.shards) {
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        ClientId i = members[a], j = members[b];
        FieldVector u_ij = uniform_field_vector(d, rng);
        FieldVector u_ji(d);
        for (std::size_t k = 0; k < d; ++k) u_ji[k] = ~u_ij[k] + 1ULL;
        table.masks.emplace(std::make_pair(i, j), std::move(u_ij));
        table.masks.emplace(std::make_pair(j, i), std::move(u_ji));
      }
    }
  }
  return table;
}

FieldVector mask_update(const RealVector& update, ClientId client,
                        const MaskTable& table, const FixedPointParams& params,
                        EncodeStats* stats) {
  FieldVector out = encode_fixed(update, params, stats);
  auto it = table.masks.lower_bound({client, 0});
  for (; it != table.masks.end() && it->first.first == client; ++it) {
    const FieldVector& u = it->second;
    if (u.size() != out.size())
      throw std::invalid_argument("mask_update: dimension mismatch");
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += u[k];
  }
  return out;
}

void ServerTranscript::validate() const {
  plan.validate();
  if (plan.n != n || masked.size() != n)
    throw std::invalid_argument("ServerTranscript: row count mismatch");
  for (const auto& row : masked) {
    if (row.size() != d)
      throw std::invalid_argument("ServerTranscript: row length mismatch");
  }
}

RealVector aggregate_shard(const ServerTranscript& t, ShardId shard,
                           const FixedPointParams& params) {
  if (shard >= t.plan.p)
    throw std::invalid_argument("aggregate_shard: shard out of range");
  const auto& members = t.plan.shards[shard];
  params.validate(members.size());
  FieldVector sum(t.d, 0ULL);
  for (ClientId c : members) {
    const FieldVector& row = t.masked.at(c);
    for (std::size_t k = 0; k < t.d; ++k) sum[k] += row[k];
  }
  return decode_fixed(sum, params, static_cast<double>(members.size()));
}

std::vector<RealVector> aggregate_all_shards(const ServerTranscript& t,
                                             const FixedPointParams& params) {
  std::vector<RealVector> out;
  out.reserve(t.plan.p);
  for (ShardId s = 0; s < t.plan.p; ++s)
    out.push_back(aggregate_shard(t, s, params));
  return out;
}

ServerTranscript simulate_ideal_transcript(
    const ShardPlan& plan, const std::vector<RealVector>& shard_sums,
    const FixedPointParams& params, SeededRng& rng) {
  if (shard_sums.size() != plan.p)
    throw std::invalid_argument("simulate_ideal_transcript: need one sum per shard");
  ServerTranscript t;
  t.n = plan.n;
  t.d = shard_sums.empty() ? 0 : shard_sums[0].size();
  t.plan = plan;
  t.masked.assign(plan.n, FieldVector(t.d, 0ULL));
  for (ShardId s = 0; s < plan.p; ++s) {
    const auto& members = plan.shards[s];
    FieldVector residual = encode_fixed(shard_sums[s], params);
    if (residual.size() != t.d)
      throw std::invalid_argument("simulate_ideal_transcript: dim mismatch");
    for (std::size_t a = 0; a + 1 < members.size(); ++a) {
      FieldVector row = uniform_field_vector(t.d, rng);
      for (std::size_t k = 0; k < t.d; ++k) residual[k] -= row[k];
      t.masked[members[a]] = std::move(row);
    }
    t.masked[members.back()] = std::move(residual);
  }
  return t;
}

namespace {

constexpr char kMagic[4] = {'F', 'S', 'A', '1'};

void put_u64(std::ofstream& out, u64 v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

u64 get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("transcript: truncated file");
  u64 v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<u64>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_transcript(const ServerTranscript& t, const std::string& path) {
  t.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("transcript: cannot open " + path);
  out.write(kMagic, 4);
  put_u64(out, t.n);
  put_u64(out, t.d);
  put_u64(out, t.plan.p);
  put_u64(out, t.round);
  for (ClientId c = 0; c < t.n; ++c) put_u64(out, t.plan.shard_of[c]);
  for (const auto& row : t.masked)
    for (u64 v : row) put_u64(out, v);
  if (!out) throw std::runtime_error("transcript: write failed for " + path);
}

ServerTranscript load_transcript(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("transcript: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("transcript: bad magic in " + path);
  ServerTranscript t;
  t.n = get_u64(in);
  t.d = get_u64(in);
  std::size_t p = get_u64(in);
  t.round = get_u64(in);
  if (t.n == 0 || p == 0 || p > t.n || t.d > (1ULL << 32))
    throw std::runtime_error("transcript: implausible header in " + path);
  t.plan.n = t.n;
  t.plan.p = p;
  t.plan.shard_of.resize(t.n);
  t.plan.shards.assign(p, {});
  for (ClientId c = 0; c < t.n; ++c) {
    u64 s = get_u64(in);
    if (s >= p) throw std::runtime_error("transcript: shard id out of range");
    t.plan.shard_of[c] = static_cast<ShardId>(s);
    t.plan.shards[s].push_back(c);
  }
  t.masked.assign(t.n, FieldVector(t.d));
  for (auto& row : t.masked)
    for (auto& v : row) v = get_u64(in);
  char extra;
  if (in.read(&extra, 1))
    throw std::runtime_error("transcript: trailing bytes in " + path);
  t.validate();
  return t;
}

void accumulate_value_histogram(const ServerTranscript& t,
                                std::vector<u64>& hist) {
  const std::size_t bins = hist.size();
  if (bins < 4 || (bins & (bins - 1)) != 0)
    throw std::invalid_argument(
        "accumulate_value_histogram: bins must be a power of two >= 4");
  unsigned bin_bits = static_cast<unsigned>(std::countr_zero(bins));
  unsigned lo_bits = bin_bits / 2;
  unsigned hi_bits = bin_bits - lo_bits;
  for (const auto& row : t.masked)
    for (u64 x : row) {
      const u64 hi = x >> (64 - hi_bits);
      const u64 lo = x & ((1ULL << lo_bits) - 1ULL);
      hist[(hi << lo_bits) | lo] += 1;
    }
}

ChiSquareResult transcript_uniformity_test(const ServerTranscript& real,
                                           const ServerTranscript& ideal,
                                           std::size_t bins) {
  std::vector<u64> ha(bins, 0), hb(bins, 0);
  accumulate_value_histogram(real, ha);
  accumulate_value_histogram(ideal, hb);
  return chi_square_two_sample(ha, hb);
}

}  // namespace fedfence
