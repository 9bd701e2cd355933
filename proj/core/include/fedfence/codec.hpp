#pragma once

#include "fedfence/rng.hpp"
#include "fedfence/types.hpp"

namespace fedfence {

// Fixed-point map into Z_q, q = 2^64. encode multiplies by 2^scale_bits,
// rounds half to even, and embeds the signed result as two's complement.
// Sums of up to max_addends encodings stay strictly inside (-2^63, 2^63),
// so a mod-q sum decodes to the exact rational mean of the quantized
// inputs: the homomorphism never saturates mid-aggregation.
struct FixedPointParams {
  u32 scale_bits = 24;
  double clamp_abs = 32768.0;  // 2^15

  // Largest k with k * clamp_abs * 2^scale_bits < 2^63.
  u64 max_addends() const;
  // Throws std::invalid_argument unless scale_bits < 40, clamp_abs > 0,
  // and addends <= max_addends().
  void validate(u64 addends) const;
};

struct EncodeStats {
  std::size_t clamped = 0;  // entries saturated to +-clamp_abs
};

// Out-of-range entries clamp silently (counted in stats when given);
// NaN/Inf throw std::invalid_argument.
FieldVector encode_fixed(const RealVector& v, const FixedPointParams& params,
                         EncodeStats* stats = nullptr);

// Interprets each entry as signed two's complement and divides by
// divisor * 2^scale_bits. divisor is the number of addends when decoding
// a sum, 1 for a single encoding.
RealVector decode_fixed(const FieldVector& v, const FixedPointParams& params,
                        double divisor = 1.0);

FieldVector uniform_field_vector(std::size_t d, SeededRng& rng);

}  // namespace fedfence
