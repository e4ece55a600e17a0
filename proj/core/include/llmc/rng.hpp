#ifndef LLMC_RNG_HPP
#define LLMC_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace llmc {

/// Per-path random stream. The state is derived from (master_seed, index)
/// through std::seed_seq, so streams for distinct indices are independent
/// and reproducible on every platform. Copying a stream copies its state.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                      0x6c6c6d63u};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Exponential(1) by inversion.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace llmc

#endif  // LLMC_RNG_HPP
