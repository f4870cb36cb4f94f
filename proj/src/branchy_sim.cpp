#include "pathcal/branchy_sim.hpp"

#include <algorithm>
#include <fstream>

namespace pathcal {

using nlohmann::json;

void BranchySimConfig::validate() const {
  const auto n = static_cast<TokenId>(vocab.size());
  if (n == 0) throw FormatError("branchy sim: empty vocab");
  std::vector<int> owners(vocab.size(), 0);
  auto claim = [&](TokenId id, const char* role) {
    if (id < 0 || id >= n) {
      throw FormatError(std::string("branchy sim: ") + role + " id out of range");
    }
    if (owners[id]++ != 0) {
      throw FormatError(std::string("branchy sim: id ") + std::to_string(id) +
                        " has more than one role");
    }
  };
  for (TokenId id : content) claim(id, "content");
  for (TokenId id : continuation) claim(id, "continuation");
  for (TokenId id : revision) claim(id, "revision");
  for (TokenId id : alternative) claim(id, "alternative");
  claim(answer_correct, "answer_correct");
  claim(answer_wrong, "answer_wrong");
  claim(end_tag, "end_tag");
  claim(eos, "eos");
  if (content.empty()) throw FormatError("branchy sim: needs content tokens");
  if (max_steps == 0) throw FormatError("branchy sim: max_steps must be positive");
}

namespace {

json role_logits_json(const RoleLogits& r) {
  return {{"content", r.content},
          {"continuation", r.continuation},
          {"revision", r.revision},
          {"alternative", r.alternative},
          {"end_tag", r.end_tag}};
}

RoleLogits role_logits_from(const json& j) {
  return {j.at("content").get<double>(), j.at("continuation").get<double>(),
          j.at("revision").get<double>(), j.at("alternative").get<double>(),
          j.at("end_tag").get<double>()};
}

}  // namespace

json BranchySimConfig::to_json() const {
  return {{"vocab", vocab},
          {"roles",
           {{"content", content},
            {"continuation", continuation},
            {"revision", revision},
            {"alternative", alternative},
            {"answer_correct", answer_correct},
            {"answer_wrong", answer_wrong},
            {"end_tag", end_tag},
            {"eos", eos}}},
          {"on_track_logits", role_logits_json(on_track)},
          {"detour_logits", role_logits_json(detour)},
          {"finish_slope", finish_slope},
          {"finish_cap", finish_cap},
          {"answer_logit", answer_logit},
          {"impossible_logit", impossible_logit},
          {"max_steps", max_steps}};
}

BranchySimConfig BranchySimConfig::from_json(const json& j) {
  try {
    BranchySimConfig c;
    c.vocab = j.at("vocab").get<std::vector<std::string>>();
    const auto& roles = j.at("roles");
    c.content = roles.at("content").get<std::vector<TokenId>>();
    c.continuation = roles.value("continuation", std::vector<TokenId>{});
    c.revision = roles.value("revision", std::vector<TokenId>{});
    c.alternative = roles.value("alternative", std::vector<TokenId>{});
    c.answer_correct = roles.at("answer_correct").get<TokenId>();
    c.answer_wrong = roles.at("answer_wrong").get<TokenId>();
    c.end_tag = roles.at("end_tag").get<TokenId>();
    c.eos = roles.at("eos").get<TokenId>();
    c.on_track = role_logits_from(j.at("on_track_logits"));
    c.detour = role_logits_from(j.at("detour_logits"));
    c.finish_slope = j.at("finish_slope").get<double>();
    c.finish_cap = j.at("finish_cap").get<double>();
    c.answer_logit = j.value("answer_logit", 10.0);
    c.impossible_logit = j.value("impossible_logit", -30.0);
    c.max_steps = j.value("max_steps", std::size_t{4096});
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("branchy sim: ") + e.what());
  }
}

BranchySimConfig BranchySimConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open branchy sim config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

BranchySimConfig default_branchy_config() {
  // A wide content vocabulary keeps per-token content probability below the
  // markers', so nucleus truncation trims content rather than markers.
  constexpr int kContent = 200;
  BranchySimConfig c;
  for (int i = 0; i < kContent; ++i) {
    c.vocab.push_back(std::string(" ") + static_cast<char>('a' + i / 26) +
                      static_cast<char>('a' + i % 26));
    c.content.push_back(i);
  }
  auto add = [&](std::vector<TokenId>& role, std::initializer_list<const char*> forms) {
    for (const char* f : forms) {
      role.push_back(static_cast<TokenId>(c.vocab.size()));
      c.vocab.emplace_back(f);
    }
  };
  add(c.continuation, {" So", " so", " Therefore", " therefore", " Thus"});
  add(c.revision, {" But", " but", " However", " no", " Wait", " wait"});
  add(c.alternative, {" Alternatively", " alternatively"});
  auto single = [&](const char* f) {
    c.vocab.emplace_back(f);
    return static_cast<TokenId>(c.vocab.size() - 1);
  };
  c.end_tag = single("</think>");
  c.answer_correct = single(" \\boxed{17}");
  c.answer_wrong = single(" \\boxed{16}");
  c.eos = single("<|eos|>");
  c.on_track = {.content = 0.0, .continuation = 0.76, .revision = 0.21, .alternative = 0.10,
                .end_tag = -3.0};
  c.detour = {.content = 0.0, .continuation = -4.0, .revision = 2.04, .alternative = 1.86,
              .end_tag = -2.0};
  c.finish_slope = 0.01;
  c.finish_cap = 6.0;
  c.max_steps = 4096;
  return c;
}

BranchySim::BranchySim(BranchySimConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  roles_.assign(cfg_.vocab.size(), Role::kOther);
  for (TokenId id : cfg_.content) roles_[id] = Role::kContent;
  for (TokenId id : cfg_.continuation) roles_[id] = Role::kContinuation;
  for (TokenId id : cfg_.revision) roles_[id] = Role::kRevision;
  for (TokenId id : cfg_.alternative) roles_[id] = Role::kAlternative;
  roles_[cfg_.answer_correct] = Role::kAnswerCorrect;
  roles_[cfg_.answer_wrong] = Role::kAnswerWrong;
  roles_[cfg_.end_tag] = Role::kEndTag;
  roles_[cfg_.eos] = Role::kEos;
}

SimState BranchySim::advance(SimState s, TokenId tok) const {
  ++s.steps;
  const Role role = (tok >= 0 && static_cast<std::size_t>(tok) < roles_.size())
                        ? roles_[tok]
                        : Role::kOther;
  using Phase = SimState::Phase;
  switch (s.phase) {
    case Phase::kThinking:
      if ((role == Role::kContent || role == Role::kContinuation) && s.on_track) {
        ++s.progress;
      } else if (role == Role::kRevision || role == Role::kAlternative) {
        s.on_track = !s.on_track;
        ++s.switches;
        if (!s.on_track) s.left_track = true;
      } else if (role == Role::kEndTag) {
        s.phase = Phase::kAnswering;
      }
      break;
    case Phase::kAnswering:
      if (role == Role::kAnswerCorrect || role == Role::kAnswerWrong) s.phase = Phase::kDone;
      break;
    case Phase::kDone:
      break;
  }
  return s;
}

SimState BranchySim::state_after(std::span<const TokenId> history) const {
  SimState s;
  for (TokenId tok : history) s = advance(s, tok);
  return s;
}

LogitRow BranchySim::logits_for(const SimState& s) const {
  LogitRow row(cfg_.vocab.size(), cfg_.impossible_logit);
  if (s.steps >= cfg_.max_steps || s.phase == SimState::Phase::kDone) {
    row[cfg_.eos] = cfg_.answer_logit;
    return row;
  }
  if (s.phase == SimState::Phase::kAnswering) {
    row[s.on_track ? cfg_.answer_correct : cfg_.answer_wrong] = cfg_.answer_logit;
    return row;
  }
  const RoleLogits& r = s.on_track ? cfg_.on_track : cfg_.detour;
  for (TokenId id : cfg_.content) row[id] = r.content;
  for (TokenId id : cfg_.continuation) row[id] = r.continuation;
  for (TokenId id : cfg_.revision) row[id] = r.revision;
  for (TokenId id : cfg_.alternative) row[id] = r.alternative;
  row[cfg_.end_tag] =
      r.end_tag + std::min(cfg_.finish_slope * static_cast<double>(s.progress), cfg_.finish_cap);
  return row;
}

LogitRow BranchySim::next_logits(std::span<const TokenId> history) const {
  return logits_for(state_after(history));
}

namespace {

class BranchyCursor final : public DecodeCursor {
 public:
  BranchyCursor(const BranchySim& sim, std::span<const TokenId> prompt)
      : sim_(sim), state_(sim.state_after(prompt)) {}
  LogitRow next_logits() override { return sim_.logits_for(state_); }
  void push(TokenId tok) override { state_ = sim_.advance(state_, tok); }

 private:
  const BranchySim& sim_;
  SimState state_;
};

}  // namespace

std::unique_ptr<DecodeCursor> BranchySim::start(std::span<const TokenId> prompt) const {
  return std::make_unique<BranchyCursor>(*this, prompt);
}

}  // namespace pathcal
