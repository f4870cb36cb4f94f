#include "pathcal/scripted_model.hpp"

#include <cmath>
#include <fstream>

namespace pathcal {

using nlohmann::json;

ScriptedModel::ScriptedModel(std::size_t vocab_size, TokenId eos_id,
                             std::map<std::string, State> states, std::string start)
    : vocab_size_(vocab_size), eos_id_(eos_id), states_(std::move(states)),
      start_(std::move(start)) {
  if (vocab_size_ == 0) throw FormatError("scripted model: vocab_size must be positive");
  if (eos_id_ < 0 || static_cast<std::size_t>(eos_id_) >= vocab_size_) {
    throw FormatError("scripted model: eos_id out of range");
  }
  if (!states_.contains(start_)) throw FormatError("scripted model: unknown start state");
  for (const auto& [name, state] : states_) {
    if (state.logits.size() != vocab_size_) {
      throw FormatError("scripted model: state '" + name + "' has wrong logit row length");
    }
    for (double v : state.logits) {
      if (!std::isfinite(v)) throw FormatError("scripted model: non-finite logit in '" + name + "'");
    }
    for (const auto& [tok, target] : state.next) {
      if (tok < 0 || static_cast<std::size_t>(tok) >= vocab_size_) {
        throw FormatError("scripted model: transition token out of range in '" + name + "'");
      }
      if (!states_.contains(target)) {
        throw FormatError("scripted model: '" + name + "' transitions to unknown state '" +
                          target + "'");
      }
    }
  }
}

namespace {

LogitRow parse_row(const json& j, std::size_t vocab_size) {
  if (j.is_array()) return j.get<LogitRow>();
  LogitRow row(vocab_size, j.value("fill", -30.0));
  if (j.contains("set")) {
    for (const auto& [key, value] : j.at("set").items()) {
      const long id = std::stol(key);
      if (id < 0 || static_cast<std::size_t>(id) >= vocab_size) {
        throw FormatError("scripted model: logit id " + key + " out of range");
      }
      row[id] = value.get<double>();
    }
  }
  return row;
}

}  // namespace

ScriptedModel ScriptedModel::from_json(const json& j) {
  try {
    std::vector<std::string> vocab;
    if (j.contains("vocab")) vocab = j.at("vocab").get<std::vector<std::string>>();
    const std::size_t vocab_size =
        j.contains("vocab_size") ? j.at("vocab_size").get<std::size_t>() : vocab.size();
    std::map<std::string, State> states;
    for (const auto& [name, sj] : j.at("states").items()) {
      State state;
      state.logits = parse_row(sj.at("logits"), vocab_size);
      if (sj.contains("next")) {
        for (const auto& [tok, target] : sj.at("next").items()) {
          state.next.emplace(static_cast<TokenId>(std::stol(tok)), target.get<std::string>());
        }
      }
      states.emplace(name, std::move(state));
    }
    ScriptedModel model(vocab_size, j.at("eos_id").get<TokenId>(), std::move(states),
                        j.at("start").get<std::string>());
    if (!vocab.empty()) model.set_vocab(std::move(vocab));
    if (j.contains("correct_ids")) {
      model.set_correct_ids(j.at("correct_ids").get<std::vector<TokenId>>());
    }
    return model;
  } catch (const json::exception& e) {
    throw FormatError(std::string("scripted model: ") + e.what());
  } catch (const std::logic_error& e) {
    throw FormatError(std::string("scripted model: ") + e.what());
  }
}

ScriptedModel ScriptedModel::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scripted model " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void ScriptedModel::set_vocab(std::vector<std::string> vocab) {
  if (vocab.size() != vocab_size_) {
    throw FormatError("scripted model: vocab has " + std::to_string(vocab.size()) +
                      " entries, expected " + std::to_string(vocab_size_));
  }
  vocab_ = std::move(vocab);
}

const std::string& ScriptedModel::transition(const std::string& from, TokenId tok) const {
  const auto& next = states_.at(from).next;
  auto it = next.find(tok);
  return it == next.end() ? from : it->second;
}

const std::string& ScriptedModel::state_after(std::span<const TokenId> history) const {
  const std::string* state = &start_;
  for (TokenId tok : history) state = &transition(*state, tok);
  return *state;
}

LogitRow ScriptedModel::next_logits(std::span<const TokenId> history) const {
  return states_.at(state_after(history)).logits;
}

namespace {

class ScriptedCursor final : public DecodeCursor {
 public:
  ScriptedCursor(const ScriptedModel& model, std::span<const TokenId> prompt)
      : model_(model), state_(&model.state_after(prompt)) {}
  LogitRow next_logits() override { return model_.next_logits_for(*state_); }
  void push(TokenId tok) override { state_ = &model_.transition(*state_, tok); }

 private:
  const ScriptedModel& model_;
  const std::string* state_;
};

}  // namespace

std::unique_ptr<DecodeCursor> ScriptedModel::start(std::span<const TokenId> prompt) const {
  return std::make_unique<ScriptedCursor>(*this, prompt);
}

}  // namespace pathcal
