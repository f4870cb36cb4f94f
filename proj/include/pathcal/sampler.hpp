#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

#include "pathcal/types.hpp"

namespace pathcal {

// Counter-based generator: output i of stream k is splitmix64's finalizer
// applied to mix(k) + i * golden-gamma. Streams are addressed by key, so any
// episode can be replayed without running the ones before it.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key);

  // Stream for episode `index` under `seed` (keyed by seed XOR index).
  static CounterRng stream(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(seed ^ index);
  }

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t x);
// Hash-combines a seed with sub-indices into a new stream key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

struct SamplerConfig {
  double temperature = 0.6;
  double top_p = 0.95;
  std::uint64_t seed = 42;
  std::size_t max_new_tokens = 8192;

  void validate() const;
};

// Temperature scaling, then nucleus truncation: tokens in descending
// probability (ties by ascending id) until the kept mass reaches top_p, then
// one draw from the renormalized set.
TokenId sample_token(std::span<const double> logits, const SamplerConfig& cfg, CounterRng& rng);

}  // namespace pathcal
