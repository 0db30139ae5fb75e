#pragma once

#include <cstdint>
#include <random>

namespace pat {

// Seeded generator with hand-rolled value mappings. std::*_distribution is
// implementation-defined, so reproducibility across toolchains requires
// deriving values from the raw engine output ourselves.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next() { return gen_(); }

  // [0, 1) with 53 usable bits.
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  // [0, n). Modulo bias is far below anything observable at our ranges.
  std::uint64_t integer(std::uint64_t n) { return n ? gen_() % n : 0; }

  // Standard normal via Box-Muller (deterministic, two raw draws).
  double gaussian();

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pat
