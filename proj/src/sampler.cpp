#include "pathcal/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "pathcal/kernels.hpp"

namespace pathcal {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(seed + kGamma);
  h = mix64(h ^ (a + 2 * kGamma));
  return mix64(h ^ (b + 3 * kGamma));
}

CounterRng::CounterRng(std::uint64_t key) : key_(mix64(key)) {}

std::uint64_t CounterRng::next_u64() { return mix64(key_ + (++counter_) * kGamma); }

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

void SamplerConfig::validate() const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ConfigError("sampler.temperature must be > 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) throw ConfigError("sampler.top_p must be in (0, 1]");
  if (max_new_tokens == 0) throw ConfigError("sampler.max_new_tokens must be positive");
}

TokenId sample_token(std::span<const double> logits, const SamplerConfig& cfg, CounterRng& rng) {
  const std::size_t n = logits.size();
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = logits[i] / cfg.temperature;
  std::vector<double> probs(n);
  kernels::softmax(scaled, probs);

  std::vector<TokenId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return probs[a] > probs[b]; });

  std::size_t keep = 0;
  double mass = 0.0;
  while (keep < n) {
    mass += probs[order[keep]];
    ++keep;
    if (mass >= cfg.top_p) break;
  }

  const double target = rng.uniform() * mass;
  double acc = 0.0;
  for (std::size_t k = 0; k < keep; ++k) {
    acc += probs[order[k]];
    if (target < acc) return order[k];
  }
  // Rounding left target at the top of the range: take the last kept token
  // that carries mass.
  for (std::size_t k = keep; k-- > 0;) {
    if (probs[order[k]] > 0.0) return order[k];
  }
  return order[0];
}

}  // namespace pathcal
