#include "pathcal/diagnostics.hpp"

#include <algorithm>
#include <cstdio>

#include <omp.h>

namespace pathcal {

using nlohmann::json;

void InterventionConfig::validate() const {
  if (n_normal == 0 || n_forced == 0 || max_prefixes == 0) {
    throw ConfigError("diagnostics: continuation and prefix counts must be positive");
  }
  if (!(0.0 < low_max && low_max < high_min && high_min < 1.0)) {
    throw ConfigError("diagnostics: need 0 < low_max < high_min < 1");
  }
}

std::string_view to_string(StateClass state) {
  switch (state) {
    case StateClass::kLow:
      return "low";
    case StateClass::kMid:
      return "mid";
    case StateClass::kHigh:
      return "high";
  }
  return "?";
}

json to_json(const PrefixRecord& r) {
  json forced = json::object();
  for (const auto& [id, v] : r.v_forced) forced[std::to_string(id)] = v;
  return {{"index", r.index}, {"depth", r.depth},   {"prefix_ids", r.prefix_ids},
          {"v_hat", r.v_hat}, {"v_forced", forced}, {"delta", r.delta},
          {"state", to_string(r.state)}};
}

CorrectnessOracle emitted_correct_answer() {
  return [](const EpisodeResult& e) { return e.success; };
}

std::vector<std::size_t> select_prefix_positions(std::span<const TokenId> generated,
                                                 std::span<const TokenId> candidates,
                                                 const InterventionConfig& cfg,
                                                 std::size_t region_end) {
  std::vector<std::size_t> out;
  const std::size_t end = std::min(region_end, generated.size());
  for (std::size_t i = cfg.min_depth; i < end && out.size() < cfg.max_prefixes; ++i) {
    if (std::find(candidates.begin(), candidates.end(), generated[i]) == candidates.end()) {
      continue;
    }
    if (!out.empty() && i - out.back() < cfg.min_gap) continue;
    out.push_back(i);
  }
  return out;
}

std::vector<PrefixRecord> collect_prefixes(const LogitSource& source,
                                           const SamplerConfig& sampler,
                                           const ResolvedMarkers& markers,
                                           const InterventionConfig& cfg,
                                           const DiagnosticContext& ctx) {
  cfg.validate();
  EpisodeSpec spec{ctx.prompt, {}, ctx.end_tag, false};
  SamplerConfig base = sampler;
  base.seed = derive_seed(ctx.seed, 0xBA5E);
  const auto rollout = run_episode(source, OriginalController{}, base, spec);

  // Reasoning region ends where the end tag starts.
  std::size_t region_end = rollout.tokens.size();
  SessionState session(ctx.end_tag);
  for (std::size_t i = 0; i < rollout.tokens.size(); ++i) {
    session.observe(rollout.tokens[i]);
    if (session.think_closed()) {
      region_end = i + 1 - ctx.end_tag.size();
      break;
    }
  }

  const auto candidates = markers.all_ids();
  const auto positions = select_prefix_positions(rollout.tokens, candidates, cfg, region_end);
  if (positions.empty()) throw NoPrefixFound("rollout has no qualifying marker position");

  std::vector<PrefixRecord> out;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    PrefixRecord r;
    r.index = k;
    r.depth = positions[k];
    r.prefix_ids.assign(rollout.tokens.begin(),
                        rollout.tokens.begin() + static_cast<std::ptrdiff_t>(positions[k]));
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

// Mean correctness over n continuations from prefix (+ forced token).
double continuation_value(const LogitSource& source, const SamplerConfig& sampler,
                          const CorrectnessOracle& oracle, const DiagnosticContext& ctx,
                          const PrefixRecord& prefix, std::optional<TokenId> forced,
                          std::size_t n) {
  EpisodeSpec spec{ctx.prompt, prefix.prefix_ids, ctx.end_tag, false};
  if (forced) spec.generated_prefix.push_back(*forced);
  const OriginalController original;
  std::vector<char> outcomes(n, 0);
  const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1) if (!omp_in_parallel())
  for (std::ptrdiff_t j = 0; j < count; ++j) {
    SamplerConfig s = sampler;
    s.seed = derive_seed(ctx.seed, prefix.index, static_cast<std::uint64_t>(j));
    outcomes[j] = oracle(run_episode(source, original, s, spec)) ? 1 : 0;
  }
  std::size_t hits = 0;
  for (char o : outcomes) hits += static_cast<std::size_t>(o);
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace

PrefixRecord estimate_values(PrefixRecord prefix, const LogitSource& source,
                             const SamplerConfig& sampler, const CorrectnessOracle& oracle,
                             const InterventionConfig& cfg, const DiagnosticContext& ctx) {
  cfg.validate();
  prefix.v_hat =
      continuation_value(source, sampler, oracle, ctx, prefix, std::nullopt, cfg.n_normal);
  prefix.v_forced.clear();
  for (TokenId m : cfg.forced_markers) {
    prefix.v_forced.emplace_back(
        m, continuation_value(source, sampler, oracle, ctx, prefix, m, cfg.n_forced));
  }
  prefix.delta = prefix.v_forced.size() >= 2
                     ? prefix.v_forced[0].second - prefix.v_forced[1].second
                     : 0.0;
  prefix.state = stratify(prefix.v_hat, cfg);
  return prefix;
}

StateClass stratify(double v_hat, const InterventionConfig& cfg) {
  if (v_hat <= cfg.low_max) return StateClass::kLow;
  if (v_hat >= cfg.high_min) return StateClass::kHigh;
  return StateClass::kMid;
}

std::vector<StateSummary> summarize_states(const std::vector<PrefixRecord>& records,
                                           const std::string& dataset) {
  std::vector<StateSummary> out;
  for (StateClass state : {StateClass::kLow, StateClass::kMid, StateClass::kHigh}) {
    StateSummary s{dataset, state};
    for (const auto& r : records) {
      if (r.state != state) continue;
      ++s.count;
      if (r.v_forced.size() >= 1) s.v_first += r.v_forced[0].second;
      if (r.v_forced.size() >= 2) s.v_second += r.v_forced[1].second;
      s.delta += r.delta;
    }
    if (s.count == 0) continue;
    const double n = static_cast<double>(s.count);
    s.v_first /= n;
    s.v_second /= n;
    s.delta /= n;
    out.push_back(s);
  }
  return out;
}

std::string state_summary_csv(const std::vector<StateSummary>& rows) {
  std::string out = "dataset,state,V_So,V_But,delta\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f\n", r.v_first, r.v_second, r.delta);
    out += r.dataset + "," + std::string(to_string(r.state)) + buf;
  }
  return out;
}

std::vector<SweepRow> suppression_sweep(const LogitSource& source, const SamplerConfig& sampler,
                                        const std::vector<SweepVariant>& variants,
                                        const ProblemOracle& oracle,
                                        std::span<const EpisodeSpec> problems, int jobs) {
  std::vector<SweepRow> rows;
  if (problems.empty()) return rows;
  auto evaluate = [&](std::string name, const Controller& controller) {
    const auto results = run_batch(source, controller, sampler, problems, jobs);
    SweepRow row{std::move(name)};
    for (std::size_t i = 0; i < results.size(); ++i) {
      row.accuracy += oracle(i, results[i]) ? 1.0 : 0.0;
      row.mean_length += static_cast<double>(results[i].length);
    }
    row.accuracy /= static_cast<double>(results.size());
    row.mean_length /= static_cast<double>(results.size());
    rows.push_back(std::move(row));
  };
  evaluate("original", OriginalController{});
  for (const auto& v : variants) evaluate(v.name, SuppressController(v.name, v.config));
  return rows;
}

}  // namespace pathcal
