#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pathcal/control_core.hpp"
#include "pathcal/marker_lexicon.hpp"

namespace pathcal {

// Fixed penalty on one marker group, by default only inside the think region.
struct SuppressionConfig {
  std::vector<TokenId> group_ids;
  double penalty = 5.0;
  bool think_only = true;
};

// Uniform shift on a marker set at every step, think region or not.
struct TipConfig {
  std::vector<TokenId> marker_ids;
  double delta = -3.0;
};

// Triangular position-dependent shift on a marker set, inside the think region.
struct CyclicConfig {
  std::vector<TokenId> marker_ids;
  double amplitude = 5.0;
  std::size_t period = 1200;
};

// Budget forcing: hold back the end-of-thought token until min_tokens.
struct S1Config {
  TokenId end_tag_id = 0;
  double shift = -10.0;
  std::size_t min_tokens = 1500;
};

void suppress_step(std::span<double> logits, const SuppressionConfig& cfg,
                   const SessionState& session);
void tip_step(std::span<double> logits, const TipConfig& cfg);
// Symmetric triangle: +A at phase 0, 0 at 1/4, -A at 1/2, 0 at 3/4.
double cyclic_shift_value(std::size_t t, const CyclicConfig& cfg);
void cyclic_step(std::span<double> logits, const SessionState& session, const CyclicConfig& cfg);
void s1_step(std::span<double> logits, const SessionState& session, const S1Config& cfg);

class SuppressController final : public Controller {
 public:
  SuppressController(std::string name, SuppressionConfig cfg);
  std::string_view name() const override { return name_; }
  std::optional<StepTrace> apply(std::span<double> logits,
                                 const SessionState& session) const override;

 private:
  std::string name_;
  SuppressionConfig cfg_;
};

class TipController final : public Controller {
 public:
  explicit TipController(TipConfig cfg) : cfg_(std::move(cfg)) {}
  std::string_view name() const override { return "tip"; }
  std::optional<StepTrace> apply(std::span<double> logits,
                                 const SessionState& session) const override;

 private:
  TipConfig cfg_;
};

class CyclicController final : public Controller {
 public:
  explicit CyclicController(CyclicConfig cfg);
  std::string_view name() const override { return "cyclic"; }
  std::optional<StepTrace> apply(std::span<double> logits,
                                 const SessionState& session) const override;

 private:
  CyclicConfig cfg_;
};

class S1Controller final : public Controller {
 public:
  explicit S1Controller(S1Config cfg) : cfg_(cfg) {}
  std::string_view name() const override { return "s1"; }
  std::optional<StepTrace> apply(std::span<double> logits,
                                 const SessionState& session) const override;

 private:
  S1Config cfg_;
};

// Surface forms for each suppression group (lower-case and capitalized).
const std::map<std::string, std::vector<std::string>>& suppression_groups();
// Marker set shared by TIP and CyclicReflex.
std::vector<std::string> reflection_marker_forms();

// Everything needed to build any controller by name.
struct ControllerSettings {
  std::vector<SurfaceForm> lexicon = default_lexicon();
  PathCalConfig pathcal;
  double suppress_penalty = 5.0;
  bool suppress_think_only = true;
  double tip_delta = -3.0;
  double cyclic_amplitude = 5.0;
  std::size_t cyclic_period = 1200;
  double s1_shift = -10.0;
  std::size_t s1_min_tokens = 1500;
};

// spec: original | suppress:<group> | suppress:all | tip | cyclic | s1 | pathcal.
// Throws ConfigError on unknown names.
std::unique_ptr<Controller> make_controller(std::string_view spec, const TokenizerAdapter& tok,
                                            std::span<const TokenId> end_tag,
                                            const ControllerSettings& settings);

}  // namespace pathcal
