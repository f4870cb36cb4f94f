#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pathcal/types.hpp"

namespace pathcal {

// Incremental view of a LogitSource for one decode.
class DecodeCursor {
 public:
  virtual ~DecodeCursor() = default;
  virtual LogitRow next_logits() = 0;
  virtual void push(TokenId tok) = 0;
};

// A deterministic next-token score function of the full token history.
// Implementations must be safe for concurrent const use; sampling randomness
// lives outside the source.
class LogitSource {
 public:
  virtual ~LogitSource() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual TokenId eos_id() const = 0;
  virtual LogitRow next_logits(std::span<const TokenId> history) const = 0;

  // Default cursor replays the whole history on every step.
  virtual std::unique_ptr<DecodeCursor> start(std::span<const TokenId> prompt) const;

  // Token strings indexed by id, or empty when the backend has none.
  virtual std::vector<std::string> token_strings() const { return {}; }
  // Ids whose emission marks a correct answer (synthetic backends only).
  virtual std::vector<TokenId> answer_correct_ids() const { return {}; }
};

// Cursor that keeps the history and defers to LogitSource::next_logits.
class ReplayCursor final : public DecodeCursor {
 public:
  ReplayCursor(const LogitSource& source, std::span<const TokenId> prompt)
      : source_(source), history_(prompt.begin(), prompt.end()) {}
  LogitRow next_logits() override { return source_.next_logits(history_); }
  void push(TokenId tok) override { history_.push_back(tok); }

 private:
  const LogitSource& source_;
  std::vector<TokenId> history_;
};

}  // namespace pathcal
