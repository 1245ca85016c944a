#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace falsify {

// All randomness derives from one root seed by name + index, so adding a
// consumer never perturbs another consumer's stream.
std::uint64_t derive_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0);

// mt19937_64 is bit-specified by the standard; the distributions below are
// written out so draws are identical across standard library vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform on [0, 1) with 53 bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  // Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace falsify
