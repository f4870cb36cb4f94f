#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathcal/baselines.hpp"
#include "pathcal/episode.hpp"

namespace pathcal {

struct InterventionConfig {
  std::size_t n_normal = 8;     // unforced continuations per prefix
  std::size_t n_forced = 4;     // continuations per forced marker
  std::size_t max_prefixes = 3;
  std::size_t min_depth = 100;  // generated tokens before a candidate position
  std::size_t min_gap = 100;    // between selected positions
  double low_max = 0.25;
  double high_min = 0.75;
  // First two entries define delta = V(first) - V(second).
  std::vector<TokenId> forced_markers;

  void validate() const;
};

enum class StateClass { kLow, kMid, kHigh };
std::string_view to_string(StateClass state);

struct PrefixRecord {
  std::size_t index = 0;  // position among the problem's prefixes (seed input)
  std::vector<TokenId> prefix_ids;
  std::size_t depth = 0;
  double v_hat = 0.0;
  std::vector<std::pair<TokenId, double>> v_forced;
  double delta = 0.0;
  StateClass state = StateClass::kMid;
};

nlohmann::json to_json(const PrefixRecord& record);

using CorrectnessOracle = std::function<bool(const EpisodeResult&)>;

// Oracle for synthetic backends: the episode emitted an answer-correct id.
CorrectnessOracle emitted_correct_answer();

// Where prefixes may be cut and how continuations are seeded.
struct DiagnosticContext {
  std::vector<TokenId> prompt;
  std::vector<TokenId> end_tag;
  std::uint64_t seed = 42;  // per-problem base seed
};

// Positions (indices into `generated`) immediately before a candidate marker,
// at least min_depth deep, at least min_gap after the previous selection,
// before `region_end`, at most max_prefixes of them.
std::vector<std::size_t> select_prefix_positions(std::span<const TokenId> generated,
                                                 std::span<const TokenId> candidates,
                                                 const InterventionConfig& cfg,
                                                 std::size_t region_end);

// Samples one base rollout and truncates it at the selected positions.
// Throws NoPrefixFound when no position qualifies.
std::vector<PrefixRecord> collect_prefixes(const LogitSource& source,
                                           const SamplerConfig& sampler,
                                           const ResolvedMarkers& markers,
                                           const InterventionConfig& cfg,
                                           const DiagnosticContext& ctx);

// Fills v_hat, v_forced, delta and state. Continuation j (forced or not)
// draws from stream derive_seed(ctx.seed, prefix.index, j).
PrefixRecord estimate_values(PrefixRecord prefix, const LogitSource& source,
                             const SamplerConfig& sampler, const CorrectnessOracle& oracle,
                             const InterventionConfig& cfg, const DiagnosticContext& ctx);

StateClass stratify(double v_hat, const InterventionConfig& cfg);

struct StateSummary {
  std::string dataset;
  StateClass state;
  std::size_t count = 0;
  double v_first = 0.0;   // mean V for forced_markers[0]
  double v_second = 0.0;  // mean V for forced_markers[1]
  double delta = 0.0;
};

// Per-state means over records, in low/mid/high order; empty states omitted.
std::vector<StateSummary> summarize_states(const std::vector<PrefixRecord>& records,
                                           const std::string& dataset);
std::string state_summary_csv(const std::vector<StateSummary>& rows);

struct SweepVariant {
  std::string name;
  SuppressionConfig config;
};

struct SweepRow {
  std::string variant;
  double accuracy = 0.0;
  double mean_length = 0.0;
};

// Judges episode i of a problem list.
using ProblemOracle = std::function<bool(std::size_t problem_index, const EpisodeResult&)>;

// Original first, then every variant, each over the same problems and seeds.
std::vector<SweepRow> suppression_sweep(const LogitSource& source, const SamplerConfig& sampler,
                                        const std::vector<SweepVariant>& variants,
                                        const ProblemOracle& oracle,
                                        std::span<const EpisodeSpec> problems, int jobs = 0);

}  // namespace pathcal
