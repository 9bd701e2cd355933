#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <limits>
#include <vector>

#include "fedfence/codec.hpp"
#include "fedfence/rng.hpp"

using namespace fedfence;

TEST_CASE("codec: round trip error is at most half a quantum") {
  FixedPointParams p;  // scale_bits = 24
  const double quantum = std::ldexp(1.0, -24);
  SeededRng rng(1);
  RealVector v(1000);
  for (auto& x : v) x = (rng.next_unit() - 0.5) * 200.0;
  FieldVector enc = encode_fixed(v, p);
  RealVector dec = decode_fixed(enc, p);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(std::fabs(dec[i] - v[i]) <= 0.5 * quantum + 1e-15);
}

TEST_CASE("codec: lattice points survive exactly") {
  FixedPointParams p;
  RealVector v = {0.0, 1.0, -1.0, 0.5, -0.25, 123.4375, -4096.0};
  RealVector dec = decode_fixed(encode_fixed(v, p), p);
  for (std::size_t i = 0; i < v.size(); ++i) CHECK(dec[i] == v[i]);
}

TEST_CASE("codec: rounding is half to even") {
  FixedPointParams p;  // scale 2^24
  // 1.5 units -> 2 (even), 0.5 units -> 0, 2.5 units -> 2, -1.5 units -> -2.
  RealVector v = {3.0 * 0x1.0p-25, 1.0 * 0x1.0p-25, 5.0 * 0x1.0p-25,
                  -3.0 * 0x1.0p-25};
  FieldVector enc = encode_fixed(v, p);
  CHECK(enc[0] == u64{2});
  CHECK(enc[1] == u64{0});
  CHECK(enc[2] == u64{2});
  CHECK(enc[3] == static_cast<u64>(i64{-2}));
}

TEST_CASE("codec: negative values embed as two's complement") {
  FixedPointParams p;
  RealVector v = {-1.0};
  FieldVector enc = encode_fixed(v, p);
  CHECK(enc[0] == static_cast<u64>(-static_cast<i64>(1) << 24));
  // Adding the encoding of +1.0 must give the zero word.
  FieldVector pos = encode_fixed({1.0}, p);
  CHECK(static_cast<u64>(enc[0] + pos[0]) == 0);
}

TEST_CASE("codec: clamping saturates and is counted") {
  FixedPointParams p;
  p.clamp_abs = 4.0;
  EncodeStats stats;
  RealVector v = {10.0, -7.5, 3.0, 4.0};
  FieldVector enc = encode_fixed(v, p, &stats);
  CHECK(stats.clamped == 2);
  RealVector dec = decode_fixed(enc, p);
  CHECK(dec[0] == 4.0);
  CHECK(dec[1] == -4.0);
  CHECK(dec[2] == 3.0);
  CHECK(dec[3] == 4.0);
}

TEST_CASE("codec: non-finite input throws") {
  FixedPointParams p;
  CHECK_THROWS_AS(encode_fixed({std::numeric_limits<double>::quiet_NaN()}, p),
                  std::invalid_argument);
  CHECK_THROWS_AS(encode_fixed({std::numeric_limits<double>::infinity()}, p),
                  std::invalid_argument);
  CHECK_THROWS_AS(encode_fixed({-std::numeric_limits<double>::infinity()}, p),
                  std::invalid_argument);
}

TEST_CASE("codec: parameter validation") {
  FixedPointParams p;
  CHECK_NOTHROW(p.validate(1));
  CHECK_NOTHROW(p.validate(p.max_addends()));
  CHECK_THROWS_AS(p.validate(0), std::invalid_argument);
  CHECK_THROWS_AS(p.validate(p.max_addends() + 1), std::invalid_argument);

  FixedPointParams bad = p;
  bad.scale_bits = 0;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
  bad.scale_bits = 40;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
  bad = p;
  bad.clamp_abs = 0.0;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
  bad.clamp_abs = -1.0;
  CHECK_THROWS_AS(bad.validate(1), std::invalid_argument);
}

TEST_CASE("codec: max_addends honors the headroom bound") {
  FixedPointParams p;  // clamp 2^15, scale 2^24 -> unit 2^39, k < 2^24
  const u64 k = p.max_addends();
  CHECK(k == (u64{1} << 24) - 1);
  // The defaults leave room for any shard arising from n <= 16 million.
  CHECK(k >= 1u << 20);

  FixedPointParams small;
  small.scale_bits = 1;
  small.clamp_abs = 1.0;  // unit 2 -> raw headroom 2^62, capped at 2^53
  CHECK(small.max_addends() == (u64{1} << 53));

  FixedPointParams mid;
  mid.scale_bits = 30;
  mid.clamp_abs = 1024.0;  // unit 2^40: 2^23 addends would hit the boundary
  CHECK(mid.max_addends() == (u64{1} << 23) - 1);

  FixedPointParams edge;
  edge.scale_bits = 39;
  edge.clamp_abs = 8388608.0;  // unit 2^62: only a single addend fits
  CHECK(edge.max_addends() == 1);
}

TEST_CASE("codec: modular sums decode to exact quantized means") {
  FixedPointParams p;
  SeededRng rng(7);
  const std::size_t m = 37, d = 50;
  std::vector<FieldVector> encs;
  std::vector<RealVector> quantized;
  for (std::size_t i = 0; i < m; ++i) {
    RealVector v(d);
    for (auto& x : v) x = (rng.next_unit() - 0.5) * 1000.0;
    encs.push_back(encode_fixed(v, p));
    quantized.push_back(decode_fixed(encs.back(), p));
  }
  FieldVector sum(d, 0);
  for (const auto& e : encs)
    for (std::size_t j = 0; j < d; ++j) sum[j] += e[j];  // wraps mod 2^64
  RealVector mean = decode_fixed(sum, p, static_cast<double>(m));
  for (std::size_t j = 0; j < d; ++j) {
    double expect = 0.0;
    for (std::size_t i = 0; i < m; ++i) expect += quantized[i][j];
    expect /= static_cast<double>(m);
    CHECK(mean[j] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("codec: sums that wrap the word still decode correctly") {
  // Individual encodings near +-clamp produce intermediate words beyond
  // 2^63 when summed as unsigned values; the signed reinterpretation of the
  // mod-2^64 sum must still match the rational sum while the signed total
  // stays inside the headroom bound.
  FixedPointParams p;
  RealVector big = {32768.0};
  RealVector neg = {-32768.0};
  FieldVector a = encode_fixed(big, p);
  FieldVector b = encode_fixed(neg, p);
  FieldVector sum = {a[0] + b[0]};
  RealVector dec = decode_fixed(sum, p, 2.0);
  CHECK(dec[0] == 0.0);
}

TEST_CASE("codec: decode rejects bad divisors") {
  FixedPointParams p;
  FieldVector v = {0};
  CHECK_THROWS_AS(decode_fixed(v, p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(decode_fixed(v, p, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(decode_fixed(v, p, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("codec: uniform field vector is deterministic per seed") {
  SeededRng a(5), b(5);
  FieldVector va = uniform_field_vector(64, a);
  FieldVector vb = uniform_field_vector(64, b);
  CHECK(va == vb);
  CHECK(va.size() == 64);
}
