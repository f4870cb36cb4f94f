#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathcal/logit_source.hpp"

namespace pathcal {

// Deterministic state machine over named states. Each state carries a fixed
// logit row and a transition table; tokens without an entry self-loop.
//
// JSON schema:
//   {
//     "vocab_size": 8,                 // or implied by "vocab"
//     "vocab": ["a", " b", ...],       // optional token strings
//     "eos_id": 7,
//     "correct_ids": [5],              // optional; success markers
//     "start": "s0",
//     "states": {
//       "s0": {"logits": [..dense..] | {"fill": -30, "set": {"3": 0.0}},
//              "next": {"3": "s1"}}
//     }
//   }
class ScriptedModel final : public LogitSource {
 public:
  struct State {
    LogitRow logits;
    std::map<TokenId, std::string> next;
  };

  ScriptedModel(std::size_t vocab_size, TokenId eos_id, std::map<std::string, State> states,
                std::string start);

  static ScriptedModel from_json(const nlohmann::json& j);
  static ScriptedModel load(const std::filesystem::path& path);

  std::size_t vocab_size() const override { return vocab_size_; }
  TokenId eos_id() const override { return eos_id_; }
  LogitRow next_logits(std::span<const TokenId> history) const override;
  std::unique_ptr<DecodeCursor> start(std::span<const TokenId> prompt) const override;
  std::vector<std::string> token_strings() const override { return vocab_; }
  std::vector<TokenId> answer_correct_ids() const override { return correct_ids_; }

  void set_vocab(std::vector<std::string> vocab);
  void set_correct_ids(std::vector<TokenId> ids) { correct_ids_ = std::move(ids); }

  // State reached after consuming `history` from the start state.
  const std::string& state_after(std::span<const TokenId> history) const;
  const std::string& transition(const std::string& from, TokenId tok) const;
  const LogitRow& next_logits_for(const std::string& state) const {
    return states_.at(state).logits;
  }

 private:
  std::size_t vocab_size_;
  TokenId eos_id_;
  std::map<std::string, State> states_;
  std::string start_;
  std::vector<std::string> vocab_;
  std::vector<TokenId> correct_ids_;
};

}  // namespace pathcal
