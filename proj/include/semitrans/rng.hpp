#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace semitrans {

// Counter-based generator: the k-th output of stream s under seed is
// splitmix64_mix(key(seed, s) + (k + 1) * golden), so any record can be
// regenerated independently of scheduling.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr const char* name = "splitmix64-counter";

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream + kGolden))), counter_(0) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return at(counter_++); }

  result_type at(std::uint64_t k) const { return mix(key_ + (k + 1) * kGolden); }

  // uniform on (0,1), never 0 or 1
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double exponential() { return -std::log(uniform()); }

  std::uint64_t counter() const { return counter_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_;
};

}  // namespace semitrans
