#include "pathcal/baselines.hpp"

#include <set>

namespace pathcal {

void suppress_step(std::span<double> logits, const SuppressionConfig& cfg,
                   const SessionState& session) {
  if (cfg.think_only && session.think_closed()) return;
  for (TokenId id : cfg.group_ids) logits[id] -= cfg.penalty;
}

void tip_step(std::span<double> logits, const TipConfig& cfg) {
  for (TokenId id : cfg.marker_ids) logits[id] += cfg.delta;
}

double cyclic_shift_value(std::size_t t, const CyclicConfig& cfg) {
  const std::size_t period = cfg.period;
  const std::size_t m = t % period;
  const double p = static_cast<double>(period);
  const double md = static_cast<double>(m);
  if (2 * m <= period) return cfg.amplitude * (p - 4.0 * md) / p;
  return cfg.amplitude * (4.0 * md - 3.0 * p) / p;
}

void cyclic_step(std::span<double> logits, const SessionState& session, const CyclicConfig& cfg) {
  if (session.think_closed()) return;
  const double shift = cyclic_shift_value(session.generated_count(), cfg);
  for (TokenId id : cfg.marker_ids) logits[id] += shift;
}

void s1_step(std::span<double> logits, const SessionState& session, const S1Config& cfg) {
  if (session.generated_count() < cfg.min_tokens) logits[cfg.end_tag_id] += cfg.shift;
}

SuppressController::SuppressController(std::string name, SuppressionConfig cfg)
    : name_(std::move(name)), cfg_(std::move(cfg)) {
  if (!(cfg_.penalty >= 0.0)) throw ConfigError("suppression penalty must be >= 0");
}

std::optional<StepTrace> SuppressController::apply(std::span<double> logits,
                                                   const SessionState& session) const {
  suppress_step(logits, cfg_, session);
  return std::nullopt;
}

std::optional<StepTrace> TipController::apply(std::span<double> logits,
                                              const SessionState&) const {
  tip_step(logits, cfg_);
  return std::nullopt;
}

CyclicController::CyclicController(CyclicConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.period == 0) throw ConfigError("cyclic period must be positive");
}

std::optional<StepTrace> CyclicController::apply(std::span<double> logits,
                                                 const SessionState& session) const {
  cyclic_step(logits, session, cfg_);
  return std::nullopt;
}

std::optional<StepTrace> S1Controller::apply(std::span<double> logits,
                                             const SessionState& session) const {
  s1_step(logits, session, cfg_);
  return std::nullopt;
}

const std::map<std::string, std::vector<std::string>>& suppression_groups() {
  static const std::map<std::string, std::vector<std::string>> groups = {
      {"wait", {"wait", "Wait"}},
      {"but", {"but", "But"}},
      {"however", {"however", "However"}},
      {"hmm", {"hmm", "Hmm"}},
      {"alternatively", {"alternatively", "Alternatively"}},
  };
  return groups;
}

std::vector<std::string> reflection_marker_forms() {
  return {"wait", "Wait", "but", "But", "Alternatively"};
}

std::unique_ptr<Controller> make_controller(std::string_view spec, const TokenizerAdapter& tok,
                                            std::span<const TokenId> end_tag,
                                            const ControllerSettings& settings) {
  if (spec == "original") return std::make_unique<OriginalController>();
  if (spec == "pathcal") {
    return std::make_unique<PathCalController>(resolve_markers(settings.lexicon, tok),
                                               settings.pathcal);
  }
  if (spec == "tip") {
    return std::make_unique<TipController>(
        TipConfig{resolve_token_group(reflection_marker_forms(), tok), settings.tip_delta});
  }
  if (spec == "cyclic") {
    return std::make_unique<CyclicController>(
        CyclicConfig{resolve_token_group(reflection_marker_forms(), tok),
                     settings.cyclic_amplitude, settings.cyclic_period});
  }
  if (spec == "s1") {
    if (end_tag.empty()) throw ConfigError("s1 needs an end-of-thought token");
    // Only the first token of a multi-token close tag is held back.
    return std::make_unique<S1Controller>(
        S1Config{end_tag.front(), settings.s1_shift, settings.s1_min_tokens});
  }
  constexpr std::string_view kSuppress = "suppress:";
  if (spec.starts_with(kSuppress)) {
    const std::string group(spec.substr(kSuppress.size()));
    std::vector<std::string> forms;
    if (group == "all") {
      for (const auto& [name, group_forms] : suppression_groups()) {
        forms.insert(forms.end(), group_forms.begin(), group_forms.end());
      }
    } else {
      auto it = suppression_groups().find(group);
      if (it == suppression_groups().end()) {
        throw ConfigError("unknown suppression group '" + group + "'");
      }
      forms = it->second;
    }
    return std::make_unique<SuppressController>(
        std::string(spec), SuppressionConfig{resolve_token_group(forms, tok),
                                             settings.suppress_penalty,
                                             settings.suppress_think_only});
  }
  throw ConfigError("unknown controller '" + std::string(spec) + "'");
}

}  // namespace pathcal
