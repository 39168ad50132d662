#ifndef LOOPLESS_RNG_HPP
#define LOOPLESS_RNG_HPP

#include <cstddef>
#include <cstdint>

namespace loopless {

/// SplitMix64 generator. The output sequence is fully specified by the
/// algorithm below, so a seed reproduces the same draws on every platform:
///
///   state += 0x9E3779B97F4A7C15
///   z = state
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   return z ^ (z >> 31)
///
/// Derived draws:
///   uniform01()        (next_u64() >> 11) * 2^-53, in [0, 1)
///   uniform_index(n)   Lemire's multiply-shift with rejection, exact uniform
///   bernoulli(p)       uniform01() < p, always consumes exactly one draw
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  double uniform01() noexcept;
  std::size_t uniform_index(std::size_t n);
  bool bernoulli(double p) noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace loopless

#endif
