#pragma once

#include <cstdint>
#include <random>

namespace mrddi {

/// Independent purposes a random stream can serve. Streams for different
/// stages never overlap even when seed and run agree.
enum class Stage : std::uint64_t {
  calibration = 1,
  covariates = 2,
  treatment = 3,
  outcome = 4,
  bootstrap = 5,
  oracle = 6,
  check = 7,
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic 64-bit key for the stream (seed, run, stage, sub).
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t run, Stage stage, std::uint64_t sub = 0) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ run);
  h = mix64(h ^ static_cast<std::uint64_t>(stage));
  return mix64(h ^ sub);
}

/// Keyed random stream. The engine is mt19937_64 (bit-exact across standard
/// libraries) and every variate transform is written out here, since the
/// std:: distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t key) : engine_(key) {}
  Rng(std::uint64_t seed, std::uint64_t run, Stage stage, std::uint64_t sub = 0)
      : engine_(stream_key(seed, run, stage, sub)) {}

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal();

  double exponential(double rate = 1.0);

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

 private:
  std::mt19937_64 engine_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace mrddi
