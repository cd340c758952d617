#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tslab {

/// Splittable counter-based random stream. A stream is fully determined by
/// the key triple (seed, replicate, role), so replicates can run on any
/// worker in any order and still produce identical draws. The generator is
/// the splitmix64 finalizer applied to key + counter * golden-gamma, which
/// keeps the state trivially serializable and platform independent.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t replicate, std::uint64_t role)
      : state_(mix_key(seed, replicate, role)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return finalize(state_);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform double in (0, 1]; safe as a log() argument.
  double uniform_pos() {
    return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// uint64 in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // Modulo bias is negligible for the desk-scale n used here.
    return (*this)() % n;
  }

  /// Standard normal via Box-Muller; pairs are cached. Implemented locally
  /// so that results do not depend on the C++ standard library in use.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  static std::uint64_t finalize(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix_key(std::uint64_t seed, std::uint64_t replicate,
                               std::uint64_t role) {
    std::uint64_t h = 0x8BADF00D5EEDC0DEULL;
    h = finalize(h ^ seed);
    h = finalize(h ^ replicate);
    h = finalize(h ^ role);
    return h;
  }

  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream roles; separate streams per role keep draws independent even when
/// code paths consume different numbers of variates.
namespace stream_role {
inline constexpr std::uint64_t kThetaStar = 1;
inline constexpr std::uint64_t kPosteriorDraw = 2;
inline constexpr std::uint64_t kRewardNoise = 3;
inline constexpr std::uint64_t kAux = 4;
inline constexpr std::uint64_t kFuzz = 5;
}  // namespace stream_role

}  // namespace tslab
