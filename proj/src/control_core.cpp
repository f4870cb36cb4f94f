#include "pathcal/control_core.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include "json.hpp"

#include "pathcal/kernels.hpp"

namespace pathcal {

using nlohmann::json;

void PathCalConfig::validate() const {
  auto check = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("pathcal: ") + what);
  };
  check(std::isfinite(alpha_base) && alpha_base >= 0.0, "alpha_base must be >= 0");
  check(std::isfinite(gamma), "gamma must be finite");
  check(std::isfinite(tau) && tau > 0.0, "tau must be > 0");
  check(std::isfinite(lambda_A) && lambda_A >= 0.0, "lambda_A must be >= 0");
  check(std::isfinite(beta_C) && beta_C >= 0.0, "beta_C must be >= 0");
  check(std::isfinite(beta_R) && beta_R >= 0.0, "beta_R must be >= 0");
  check(std::isfinite(beta_A) && beta_A >= 0.0, "beta_A must be >= 0");
  check(std::isfinite(rho) && rho >= 0.0, "rho must be >= 0");
  check(std::isfinite(eps) && eps > 0.0, "eps must be > 0");
}

SessionState::SessionState(std::vector<TokenId> end_tag) : end_tag_(std::move(end_tag)) {}

void SessionState::observe(TokenId tok) {
  ++generated_count_;
  if (end_tag_.empty()) return;
  suffix_.push_back(tok);
  if (suffix_.size() > end_tag_.size()) suffix_.pop_front();
  if (!think_closed_ && suffix_.size() == end_tag_.size() &&
      std::equal(suffix_.begin(), suffix_.end(), end_tag_.begin())) {
    think_closed_ = true;
  }
}

SessionState observe_token(SessionState session, TokenId tok) {
  session.observe(tok);
  return session;
}

std::string to_jsonl(const StepTrace& trace) {
  json shifts = json::object();
  for (const auto& [id, delta] : trace.shifts) shifts[std::to_string(id)] = delta;
  json j = {{"step", trace.step},     {"c", trace.scores.c},   {"r", trace.scores.r},
            {"a", trace.scores.a},    {"b", trace.scores.b},   {"gate", trace.gate},
            {"alpha", trace.alpha},   {"active", trace.active}, {"shifts", shifts}};
  return j.dump();
}

StepTrace step_trace_from_json(std::string_view line) {
  try {
    auto j = json::parse(line);
    StepTrace t;
    t.step = j.at("step").get<std::size_t>();
    t.scores = {j.at("c").get<double>(), j.at("r").get<double>(), j.at("a").get<double>(),
                j.at("b").get<double>()};
    t.gate = j.at("gate").get<double>();
    t.alpha = j.at("alpha").get<double>();
    t.active = j.at("active").get<bool>();
    for (const auto& [key, value] : j.at("shifts").items()) {
      t.shifts.emplace_back(static_cast<TokenId>(std::stol(key)), value.get<double>());
    }
    std::sort(t.shifts.begin(), t.shifts.end());
    return t;
  } catch (const std::exception& e) {
    throw FormatError(std::string("bad step trace: ") + e.what());
  }
}

std::vector<double> softmax_probs(std::span<const double> logits) {
  return kernels::softmax(logits);
}

BranchScores compute_branch_scores(std::span<const double> probs,
                                   const ResolvedMarkers& markers, double lambda_A) {
  BranchScores s;
  for (TokenId id : markers.continuation) s.c += probs[id];
  for (const auto& [id, w] : markers.revision) s.r += w * probs[id];
  for (TokenId id : markers.alternative) s.a += probs[id];
  s.b = s.r + lambda_A * s.a;
  return s;
}

double competition_gate(double c, double b, double eps) {
  const double total = c + b;
  return 4.0 * c * b / (total * total + eps);
}

double intervention_strength(const BranchScores& scores, const PathCalConfig& cfg) {
  const double c = scores.c;
  const double b = scores.b;
  if (c + b < cfg.rho) return 0.0;
  const double gate = competition_gate(c, b, cfg.eps);
  const double gap = std::max(b - c + cfg.gamma, 0.0);
  return cfg.alpha_base * gate * std::min(gap / cfg.tau, 1.0);
}

void shift_markers_in_place(std::span<double> logits, double alpha,
                            const ResolvedMarkers& markers, const PathCalConfig& cfg,
                            std::vector<std::pair<TokenId, double>>* shifts) {
  auto add = [&](TokenId id, double delta) {
    logits[id] += delta;
    if (shifts) shifts->emplace_back(id, delta);
  };
  for (TokenId id : markers.continuation) add(id, alpha * cfg.beta_C);
  for (const auto& [id, w] : markers.revision) add(id, -alpha * cfg.beta_R * w);
  for (TokenId id : markers.alternative) add(id, -alpha * cfg.beta_A);
}

LogitRow apply_pathcal_shift(const LogitRow& logits, double alpha,
                             const ResolvedMarkers& markers, const PathCalConfig& cfg) {
  LogitRow out(logits);
  shift_markers_in_place(out, alpha, markers, cfg);
  return out;
}

StepTrace pathcal_step_in_place(std::span<double> logits, std::span<const double> probs,
                                const SessionState& session, const ResolvedMarkers& markers,
                                const PathCalConfig& cfg) {
  StepTrace trace;
  trace.step = session.generated_count();
  if (session.think_closed() || session.generated_count() < cfg.minp) return trace;

  trace.scores = compute_branch_scores(probs, markers, cfg.lambda_A);
  trace.gate = competition_gate(trace.scores.c, trace.scores.b, cfg.eps);
  trace.alpha = intervention_strength(trace.scores, cfg);
  trace.active = true;
  if (trace.alpha > 0.0) {
    trace.shifts.reserve(markers.size());
    shift_markers_in_place(logits, trace.alpha, markers, cfg, &trace.shifts);
  }
  return trace;
}

std::pair<LogitRow, StepTrace> pathcal_step(const LogitRow& logits, const SessionState& session,
                                            const ResolvedMarkers& markers,
                                            const PathCalConfig& cfg) {
  LogitRow out(logits);
  if (session.think_closed() || session.generated_count() < cfg.minp) {
    StepTrace trace;
    trace.step = session.generated_count();
    return {std::move(out), std::move(trace)};
  }
  const auto probs = softmax_probs(logits);
  auto trace = pathcal_step_in_place(out, probs, session, markers, cfg);
  return {std::move(out), std::move(trace)};
}

double log_odds_delta(std::span<const double> base, std::span<const double> shifted, TokenId u,
                      TokenId v) {
  assert(base.size() == shifted.size());
  std::vector<double> log_p(base.size());
  std::vector<double> log_q(shifted.size());
  kernels::log_softmax(base, log_p);
  kernels::log_softmax(shifted, log_q);
  return (log_q[u] - log_q[v]) - (log_p[u] - log_p[v]);
}

PathCalController::PathCalController(ResolvedMarkers markers, PathCalConfig cfg)
    : markers_(std::move(markers)), cfg_(cfg) {
  cfg_.validate();
}

std::optional<StepTrace> PathCalController::apply(std::span<double> logits,
                                                  const SessionState& session) const {
  if (session.think_closed() || session.generated_count() < cfg_.minp) {
    StepTrace trace;
    trace.step = session.generated_count();
    return trace;
  }
  thread_local std::vector<double> probs;
  probs.resize(logits.size());
  kernels::softmax(logits, probs);
  return pathcal_step_in_place(logits, probs, session, markers_, cfg_);
}

}  // namespace pathcal
