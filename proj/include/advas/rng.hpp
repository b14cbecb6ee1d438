#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace advas {

/// Counter-based generator: Philox4x32 with 10 rounds (Salmon et al., 2011).
///
/// A stream is a 64-bit key plus a 128-bit block counter. Each block yields
/// four 32-bit words. `split(name)` derives an independent stream whose key is
/// SplitMix64(key ^ FNV-1a(name)), so named sub-streams are stable no matter
/// how much the parent has been consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : key_(seed) {}

  Rng split(std::string_view name) const;

  std::uint32_t next_u32();
  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);
  /// Standard normal via Box-Muller; draws are consumed in pairs.
  double normal();

  std::uint64_t key() const { return key_; }

  static std::array<std::uint32_t, 4> philox_block(std::array<std::uint32_t, 4> counter,
                                                   std::uint64_t key);

 private:
  void refill();

  std::uint64_t key_;
  std::array<std::uint32_t, 4> counter_{};
  std::array<std::uint32_t, 4> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace advas
