#pragma once

#include <cstdint>
#include <random>

namespace commgap {

// Seeded RNG stream. All randomness in the project flows through this type so
// that runs are reproducible from explicit seeds alone; the raw engine output
// is mapped to doubles/ints here instead of through std::*_distribution to keep
// traces byte-identical across standard library versions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be > 0.
  int below(int n) { return static_cast<int>(uniform() * n); }

  // Sample an index from a probability row of length n.
  template <typename Row>
  int categorical(const Row& probs, int n) {
    double u = uniform();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return n - 1;  // numerical tail
  }

  std::uint64_t raw() { return engine_(); }

  // Derive an independent child stream (for per-episode / per-instance seeds).
  Rng spawn() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ull); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace commgap
