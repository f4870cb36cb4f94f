#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathcal/logit_source.hpp"

namespace pathcal {

// Per-role base logits in one track state. Each id of a role gets the value.
struct RoleLogits {
  double content = 0.0;
  double continuation = 0.0;
  double revision = 0.0;
  double alternative = 0.0;
  double end_tag = 0.0;
};

// Synthetic reasoner that alternates between an on-track and a detour state.
// Emitting a revision or alternative marker toggles the track. On-track
// content and continuation tokens count as progress; the end-tag logit rises
// by finish_slope per unit of progress (capped at finish_cap) in both states.
// After the end tag the model answers correctly only when it closed the
// region on track, then emits eos. At max_steps only eos remains.
struct BranchySimConfig {
  std::vector<std::string> vocab;
  std::vector<TokenId> content;
  std::vector<TokenId> continuation;
  std::vector<TokenId> revision;
  std::vector<TokenId> alternative;
  TokenId answer_correct = 0;
  TokenId answer_wrong = 0;
  TokenId end_tag = 0;
  TokenId eos = 0;
  RoleLogits on_track;
  RoleLogits detour;
  double finish_slope = 0.0;
  double finish_cap = 0.0;
  double answer_logit = 10.0;
  double impossible_logit = -30.0;
  std::size_t max_steps = 4096;

  void validate() const;
  nlohmann::json to_json() const;
  static BranchySimConfig from_json(const nlohmann::json& j);
  static BranchySimConfig load(const std::filesystem::path& path);
};

BranchySimConfig default_branchy_config();

struct SimState {
  enum class Phase { kThinking, kAnswering, kDone };
  Phase phase = Phase::kThinking;
  bool on_track = true;
  std::size_t progress = 0;  // on-track content and continuation tokens
  std::size_t steps = 0;
  std::size_t switches = 0;  // track toggles so far
  bool left_track = false;   // ever entered the detour state
};

class BranchySim final : public LogitSource {
 public:
  explicit BranchySim(BranchySimConfig cfg);

  std::size_t vocab_size() const override { return cfg_.vocab.size(); }
  TokenId eos_id() const override { return cfg_.eos; }
  LogitRow next_logits(std::span<const TokenId> history) const override;
  std::unique_ptr<DecodeCursor> start(std::span<const TokenId> prompt) const override;
  std::vector<std::string> token_strings() const override { return cfg_.vocab; }
  std::vector<TokenId> answer_correct_ids() const override { return {cfg_.answer_correct}; }

  SimState advance(SimState state, TokenId tok) const;
  SimState state_after(std::span<const TokenId> history) const;
  LogitRow logits_for(const SimState& state) const;

  const BranchySimConfig& config() const { return cfg_; }

 private:
  enum class Role : unsigned char {
    kOther,
    kContent,
    kContinuation,
    kRevision,
    kAlternative,
    kAnswerCorrect,
    kAnswerWrong,
    kEndTag,
    kEos
  };

  BranchySimConfig cfg_;
  std::vector<Role> roles_;
};

}  // namespace pathcal
