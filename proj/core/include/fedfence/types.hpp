#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fedfence {

using u8 = std::uint8_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;

// Plaintext client updates and model vectors.
using RealVector = std::vector<double>;

// Vectors over Z_q with q = 2^64; arithmetic is native wrapping u64.
using FieldVector = std::vector<u64>;

using ClientId = u32;
using ShardId = u32;

double l2_norm(const RealVector& v);
double l2_distance(const RealVector& a, const RealVector& b);
double dot(const RealVector& a, const RealVector& b);
void axpy(double alpha, const RealVector& x, RealVector& y);  // y += alpha * x
RealVector scaled(const RealVector& v, double alpha);

// Throws std::invalid_argument on NaN or Inf entries.
void require_finite(const RealVector& v, const char* what);

}  // namespace fedfence
