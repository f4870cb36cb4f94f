#pragma once

// Test-side reference for scripted models: exact outcome probabilities by
// walking the probability tree. Independent of the sampler and episode code.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "pathcal/scripted_model.hpp"

namespace pathcal::testing {

// Nucleus-truncated, temperature-scaled distribution, recomputed from scratch.
inline std::vector<double> nucleus_distribution(const LogitRow& logits, double temperature,
                                                double top_p) {
  const std::size_t n = logits.size();
  double m = -INFINITY;
  for (double v : logits) m = std::max(m, v / temperature);
  std::vector<double> p(n);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += p[i] = std::exp(logits[i] / temperature - m);
  for (double& v : p) v /= z;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] > p[b]; });
  std::vector<double> out(n, 0.0);
  double mass = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    out[order[k]] = p[order[k]];
    mass += p[order[k]];
    if (mass >= top_p) break;
  }
  for (double& v : out) v /= mass;
  return out;
}

// Probability that decoding from `state` with `budget` tokens left emits a
// correct id before eos. Branches below `floor` probability are dropped.
inline double success_probability(const ScriptedModel& model, const std::string& state,
                                  std::size_t budget, double temperature, double top_p,
                                  double floor = 1e-12) {
  if (budget == 0) return 0.0;
  const auto correct = model.answer_correct_ids();
  const auto dist = nucleus_distribution(model.next_logits_for(state), temperature, top_p);
  double total = 0.0;
  for (std::size_t t = 0; t < dist.size(); ++t) {
    if (dist[t] < floor) continue;
    const auto tok = static_cast<TokenId>(t);
    if (std::find(correct.begin(), correct.end(), tok) != correct.end()) {
      total += dist[t];
    } else if (tok != model.eos_id()) {
      total += dist[t] * success_probability(model, model.transition(state, tok), budget - 1,
                                             temperature, top_p, floor / dist[t]);
    }
  }
  return total;
}

}  // namespace pathcal::testing
