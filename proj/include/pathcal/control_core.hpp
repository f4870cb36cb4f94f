#pragma once

#include <cstddef>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pathcal/marker_lexicon.hpp"
#include "pathcal/types.hpp"

namespace pathcal {

// PathCal hyperparameters. Defaults are the reference configuration.
struct PathCalConfig {
  double alpha_base = 6.0;  // maximum intervention strength
  double gamma = 0.05;      // margin inside the gap term
  double tau = 0.2;         // gap at which strength saturates
  double lambda_A = 1.5;    // weight of alternative evidence in B_t
  double beta_C = 0.5;
  double beta_R = 1.0;
  double beta_A = 1.0;
  double rho = 0.05;        // mass floor on C_t + B_t
  double eps = 1e-3;        // gate denominator stabilizer
  std::size_t minp = 100;   // warmup tokens

  // Throws ConfigError when a field is out of its domain.
  void validate() const;
};

// Per-decode mutable state. Tracks the generated-token count and whether the
// reasoning region has been closed by the end-tag sequence.
class SessionState {
 public:
  SessionState() = default;
  explicit SessionState(std::vector<TokenId> end_tag);

  void observe(TokenId tok);

  std::size_t generated_count() const { return generated_count_; }
  bool think_closed() const { return think_closed_; }
  const std::vector<TokenId>& end_tag() const { return end_tag_; }
  const std::deque<TokenId>& suffix_buffer() const { return suffix_; }

 private:
  std::size_t generated_count_ = 0;
  bool think_closed_ = false;
  std::deque<TokenId> suffix_;
  std::vector<TokenId> end_tag_;
};

SessionState observe_token(SessionState session, TokenId tok);

struct BranchScores {
  double c = 0.0;  // continuation mass
  double r = 0.0;  // weighted revision mass
  double a = 0.0;  // alternative mass
  double b = 0.0;  // competing-branch score, r + lambda_A * a
};

struct StepTrace {
  std::size_t step = 0;
  BranchScores scores;
  double gate = 0.0;
  double alpha = 0.0;
  bool active = false;
  std::vector<std::pair<TokenId, double>> shifts;
};

// One JSON object (no trailing newline) with keys step, c, r, a, b, gate,
// alpha, active, shifts.
std::string to_jsonl(const StepTrace& trace);
StepTrace step_trace_from_json(std::string_view line);

std::vector<double> softmax_probs(std::span<const double> logits);

BranchScores compute_branch_scores(std::span<const double> probs,
                                   const ResolvedMarkers& markers, double lambda_A);

// 4cb / ((c+b)^2 + eps), in [0, 1) for c, b >= 0.
double competition_gate(double c, double b, double eps);

double intervention_strength(const BranchScores& scores, const PathCalConfig& cfg);

// Adds alpha * (beta_C [C] - beta_R w_v [R] - beta_A [A]) at marker ids only.
// Touches O(|markers|) entries. When `shifts` is given, the applied deltas
// are appended to it.
void shift_markers_in_place(std::span<double> logits, double alpha,
                            const ResolvedMarkers& markers, const PathCalConfig& cfg,
                            std::vector<std::pair<TokenId, double>>* shifts = nullptr);

LogitRow apply_pathcal_shift(const LogitRow& logits, double alpha,
                             const ResolvedMarkers& markers, const PathCalConfig& cfg);

// The controller step with the next-token distribution already computed from
// the raw row. Everything after the softmax is O(|markers|).
StepTrace pathcal_step_in_place(std::span<double> logits, std::span<const double> probs,
                                const SessionState& session, const ResolvedMarkers& markers,
                                const PathCalConfig& cfg);

std::pair<LogitRow, StepTrace> pathcal_step(const LogitRow& logits, const SessionState& session,
                                            const ResolvedMarkers& markers,
                                            const PathCalConfig& cfg);

// [log q(u) - log q(v)] - [log p(u) - log p(v)] with p, q the full softmaxes
// of `base` and `shifted`.
double log_odds_delta(std::span<const double> base, std::span<const double> shifted,
                      TokenId u, TokenId v);

// A per-step logits processor. Implementations are immutable once built and
// may be shared across concurrent decodes.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual std::string_view name() const = 0;
  // Rewrites the raw row in place before sampling. Returns a trace when the
  // controller records one.
  virtual std::optional<StepTrace> apply(std::span<double> logits,
                                         const SessionState& session) const = 0;
};

class OriginalController final : public Controller {
 public:
  std::string_view name() const override { return "original"; }
  std::optional<StepTrace> apply(std::span<double>, const SessionState&) const override {
    return std::nullopt;
  }
};

class PathCalController final : public Controller {
 public:
  PathCalController(ResolvedMarkers markers, PathCalConfig cfg);

  std::string_view name() const override { return "pathcal"; }
  std::optional<StepTrace> apply(std::span<double> logits,
                                 const SessionState& session) const override;

  const ResolvedMarkers& markers() const { return markers_; }
  const PathCalConfig& config() const { return cfg_; }

 private:
  ResolvedMarkers markers_;
  PathCalConfig cfg_;
};

}  // namespace pathcal
