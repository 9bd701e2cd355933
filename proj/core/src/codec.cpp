#include "fedfence/codec.hpp"

#include <cmath>
#include <stdexcept>

namespace fedfence {

u64 FixedPointParams::max_addends() const {
  double unit = clamp_abs * std::ldexp(1.0, static_cast<int>(scale_bits));
  double k = std::floor(0x1.0p63 / unit);
  if (k >= 0x1.0p53) return 1ULL << 53;  // headroom beyond any realistic n
  return k < 1.0 ? 0 : static_cast<u64>(k) - ((k * unit >= 0x1.0p63) ? 1 : 0);
}

void FixedPointParams::validate(u64 addends) const {
  if (scale_bits == 0 || scale_bits >= 40)
    throw std::invalid_argument("FixedPointParams: scale_bits must be in [1, 39]");
  if (!(clamp_abs > 0.0) || !std::isfinite(clamp_abs))
    throw std::invalid_argument("FixedPointParams: clamp_abs must be positive");
  if (addends == 0 || addends > max_addends())
    throw std::invalid_argument(
        "FixedPointParams: addend count exceeds fixed-point headroom");
}

FieldVector encode_fixed(const RealVector& v, const FixedPointParams& params,
                         EncodeStats* stats) {
  params.validate(1);
  const double scale = std::ldexp(1.0, static_cast<int>(params.scale_bits));
  FieldVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double x = v[i];
    if (!std::isfinite(x))
      throw std::invalid_argument("encode_fixed: non-finite entry");
    double c = x;
    if (c > params.clamp_abs) c = params.clamp_abs;
    if (c < -params.clamp_abs) c = -params.clamp_abs;
    if (c != x && stats) stats->clamped += 1;
    // nearbyint under the default rounding mode is round half to even.
    double r = std::nearbyint(c * scale);
    out[i] = static_cast<u64>(static_cast<i64>(r));
  }
  return out;
}

RealVector decode_fixed(const FieldVector& v, const FixedPointParams& params,
                        double divisor) {
  if (!(divisor > 0.0) || !std::isfinite(divisor))
    throw std::invalid_argument("decode_fixed: divisor must be positive");
  const double denom =
      divisor * std::ldexp(1.0, static_cast<int>(params.scale_bits));
  RealVector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // C++20 pins unsigned->signed conversion to the two's complement value.
    out[i] = static_cast<double>(static_cast<i64>(v[i])) / denom;
  }
  return out;
}

FieldVector uniform_field_vector(std::size_t d, SeededRng& rng) {
  FieldVector out(d);
  for (auto& x : out) x = rng.next_u64();
  return out;
}

}  // namespace fedfence
