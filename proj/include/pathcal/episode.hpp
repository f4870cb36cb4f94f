#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pathcal/control_core.hpp"
#include "pathcal/logit_source.hpp"
#include "pathcal/sampler.hpp"

namespace pathcal {

struct EpisodeSpec {
  std::vector<TokenId> prompt;
  // Tokens treated as already generated (counted, observed, never sampled).
  std::vector<TokenId> generated_prefix;
  std::vector<TokenId> end_tag;
  bool record_traces = false;
};

struct EpisodeResult {
  std::vector<TokenId> tokens;  // generated tokens, prompt excluded
  std::size_t length = 0;       // == tokens.size()
  bool success = false;         // emitted one of the source's answer-correct ids
  bool budget_exhausted = false;
  bool think_closed = false;
  std::vector<StepTrace> traces;
};

// Decodes until eos or sampler.max_new_tokens generated tokens. Randomness
// comes only from the stream `rng_stream` of sampler.seed.
EpisodeResult run_episode(const LogitSource& source, const Controller& controller,
                          const SamplerConfig& sampler, const EpisodeSpec& spec,
                          std::uint64_t rng_stream = 0);

// Episode i of a batch uses rng stream i.
namespace serial {
std::vector<EpisodeResult> run_batch(const LogitSource& source, const Controller& controller,
                                     const SamplerConfig& sampler,
                                     std::span<const EpisodeSpec> specs);
}  // namespace serial

// Same results as serial::run_batch, episodes spread over `jobs` OpenMP
// threads (0 = OpenMP default).
std::vector<EpisodeResult> run_batch(const LogitSource& source, const Controller& controller,
                                     const SamplerConfig& sampler,
                                     std::span<const EpisodeSpec> specs, int jobs = 0);

}  // namespace pathcal
