#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>

namespace dslm {

// Portable random source. The standard distributions are implementation
// defined, so everything that feeds a checksum or a golden value draws through
// these helpers on top of the exactly specified mt19937_64 engine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  // Seeds from a (seed, stream) pair through std::seed_seq, whose mixing
  // algorithm is fixed by the standard.
  Rng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64() { return engine_(); }
  // Uniform integer in [lo, hi] (inclusive), unbiased.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  // Uniform in [0, 1) with 53 random bits.
  double uniform01();
  bool bernoulli(double p) { return uniform01() < p; }
  double normal(double mean = 0.0, double stddev = 1.0);

  std::string save_state() const;
  void load_state(const std::string& state);

  bool operator==(const Rng& other) const { return engine_ == other.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dslm
