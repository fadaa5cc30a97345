#ifndef ECHOSIM_RNG_HPP
#define ECHOSIM_RNG_HPP

#include <cstdint>
#include <random>

namespace echosim {

/// One independent random stream. Each accumulation run owns exactly one.
using RngStream = std::mt19937_64;

/// Stream for sweep point `point_index`, replicate `replicate` under `master_seed`.
/// Independent of scheduling order, so results do not depend on worker count.
inline RngStream make_stream(std::uint64_t master_seed, std::uint64_t point_index = 0,
                             std::uint64_t replicate = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(point_index), static_cast<std::uint32_t>(point_index >> 32),
                    static_cast<std::uint32_t>(replicate), static_cast<std::uint32_t>(replicate >> 32)};
  return RngStream(seq);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(RngStream& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace echosim

#endif // ECHOSIM_RNG_HPP
