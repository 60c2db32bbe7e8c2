#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace lrb {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Derives a substream seed from a master seed and a path of integer keys.
/// Distinct paths give statistically independent streams; the mapping is a
/// pure function so every task can rebuild its stream from its coordinates.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// FNV-1a, used to key substreams by a label (e.g. a candidate model name).
std::uint64_t hash_label(std::string_view label) noexcept;

// Stream tags keep the substreams of different consumers apart.
namespace stream {
inline constexpr std::uint64_t kReplicate = 0x5245504cULL;
inline constexpr std::uint64_t kResidual = 0x52455349ULL;
inline constexpr std::uint64_t kSubsample = 0x53554253ULL;
inline constexpr std::uint64_t kInnerBootstrap = 0x494e4e52ULL;
inline constexpr std::uint64_t kFullBootstrap = 0x46554c4cULL;
inline constexpr std::uint64_t kDesign = 0x44455347ULL;
inline constexpr std::uint64_t kTruth = 0x54525554ULL;
inline constexpr std::uint64_t kExperiment = 0x45585052ULL;
inline constexpr std::uint64_t kMethod = 0x4d455448ULL;
inline constexpr std::uint64_t kModel = 0x4d4f4445ULL;
inline constexpr std::uint64_t kSplit = 0x53504c54ULL;
}  // namespace stream

/// Seeded random stream. Satisfies UniformRandomBitGenerator so it can drive
/// the standard distributions; the helpers below use inverse-CDF transforms
/// and do not depend on library distribution internals.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }
  double normal();
  double exponential();
  /// Poisson count by inversion; normal approximation for means above 600.
  double poisson(double mu);
  /// Rademacher multiplier: +1 or -1 with probability 1/2 each.
  double rademacher() { return (engine_() >> 63) ? 1.0 : -1.0; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lrb
