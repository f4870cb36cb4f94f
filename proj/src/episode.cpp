#include "pathcal/episode.hpp"

#include <algorithm>
#include <exception>
#include <mutex>

#include <omp.h>

namespace pathcal {

EpisodeResult run_episode(const LogitSource& source, const Controller& controller,
                          const SamplerConfig& sampler, const EpisodeSpec& spec,
                          std::uint64_t rng_stream) {
  CounterRng rng = CounterRng::stream(sampler.seed, rng_stream);
  const auto correct = source.answer_correct_ids();
  SessionState session(spec.end_tag);
  EpisodeResult result;

  auto cursor = source.start(spec.prompt);
  TokenId last = -1;
  auto emit = [&](TokenId tok) {
    cursor->push(tok);
    session.observe(tok);
    result.tokens.push_back(tok);
    if (std::find(correct.begin(), correct.end(), tok) != correct.end()) result.success = true;
    last = tok;
  };
  for (TokenId tok : spec.generated_prefix) emit(tok);

  const TokenId eos = source.eos_id();
  while (last != eos && result.tokens.size() < sampler.max_new_tokens) {
    LogitRow row = cursor->next_logits();
    auto trace = controller.apply(row, session);
    if (spec.record_traces && trace) result.traces.push_back(std::move(*trace));
    emit(sample_token(row, sampler, rng));
  }
  result.length = result.tokens.size();
  result.budget_exhausted = last != eos && result.length >= sampler.max_new_tokens;
  result.think_closed = session.think_closed();
  return result;
}

namespace serial {

std::vector<EpisodeResult> run_batch(const LogitSource& source, const Controller& controller,
                                     const SamplerConfig& sampler,
                                     std::span<const EpisodeSpec> specs) {
  std::vector<EpisodeResult> out;
  out.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    out.push_back(run_episode(source, controller, sampler, specs[i], i));
  }
  return out;
}

}  // namespace serial

std::vector<EpisodeResult> run_batch(const LogitSource& source, const Controller& controller,
                                     const SamplerConfig& sampler,
                                     std::span<const EpisodeSpec> specs, int jobs) {
  std::vector<EpisodeResult> out(specs.size());
  std::exception_ptr failure;
  std::mutex failure_mu;
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(specs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      out[i] = run_episode(source, controller, sampler, specs[i], static_cast<std::uint64_t>(i));
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace pathcal
