#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pathcal/types.hpp"

namespace pathcal {

enum class MarkerCategory { kContinuation, kRevision, kAlternative };

std::string_view to_string(MarkerCategory category);
MarkerCategory parse_category(std::string_view text);

struct SurfaceForm {
  std::string text;
  MarkerCategory category;
  double weight = 1.0;
};

// The default continuation/revision/alternative surface forms, case-sensitive.
std::vector<SurfaceForm> default_lexicon();

// Lines of `<category>\t<surface-form>\t<weight>`; blank lines and `#` comments
// are skipped. Throws FormatError.
std::vector<SurfaceForm> load_lexicon(const std::filesystem::path& path);

// Anything that can turn text into token ids without adding special tokens.
class TokenizerAdapter {
 public:
  using EncodeFn = std::function<std::vector<TokenId>(std::string_view)>;

  TokenizerAdapter(EncodeFn encode, std::optional<TokenId> unknown_id,
                   std::size_t vocab_size);

  std::vector<TokenId> encode(std::string_view text) const { return encode_(text); }
  std::optional<TokenId> unknown_id() const { return unknown_id_; }
  std::size_t vocab_size() const { return vocab_size_; }

 private:
  EncodeFn encode_;
  std::optional<TokenId> unknown_id_;
  std::size_t vocab_size_;
};

// Greedy longest-match tokenizer over a flat string→id table.
class VocabTokenizer {
 public:
  VocabTokenizer(std::vector<std::pair<std::string, TokenId>> entries,
                 TokenId unknown_id);

  std::vector<TokenId> encode(std::string_view text) const;
  // Concatenates token strings; ids without an entry render as "".
  std::string decode(std::span<const TokenId> ids) const;

  TokenId unknown_id() const { return unknown_id_; }
  std::size_t vocab_size() const { return vocab_size_; }
  const std::string& token_text(TokenId id) const;

  TokenizerAdapter adapter() const;

 private:
  std::unordered_map<std::string, TokenId> by_text_;
  std::vector<std::string> by_id_;
  std::size_t max_token_len_ = 0;
  TokenId unknown_id_;
  std::size_t vocab_size_;
};

// Vocabulary file: `<escaped-token>\t<id>` per line. `\s` at the start of
// the token is a space; `\t`, `\n`, `\\` are escapes. An optional
// `#unk\t<id>` line sets the unknown id (default: one past the largest id).
VocabTokenizer load_vocab_tokenizer(const std::filesystem::path& path);
VocabTokenizer vocab_from_strings(const std::vector<std::string>& tokens,
                                  TokenId unknown_id);
std::string unescape_token(std::string_view escaped);
std::string escape_token(std::string_view raw);

// Marker id sets after tokenizer resolution. Each vector is sorted by id and
// duplicate-free; the three sets are pairwise disjoint.
struct ResolvedMarkers {
  std::vector<TokenId> continuation;
  std::vector<std::pair<TokenId, double>> revision;
  std::vector<TokenId> alternative;

  std::size_t size() const {
    return continuation.size() + revision.size() + alternative.size();
  }
  bool contains(TokenId id) const;
  std::vector<TokenId> all_ids() const;

  friend bool operator==(const ResolvedMarkers&, const ResolvedMarkers&) = default;
};

// Resolves each form's bare and leading-space realizations, keeping only
// single-token encodings. Throws OverlapError / EmptyCategoryError.
ResolvedMarkers resolve_markers(const std::vector<SurfaceForm>& forms,
                                const TokenizerAdapter& tok);

// Same single-token rule for an ad hoc group of strings (baseline marker
// sets). Empty result is allowed.
std::vector<TokenId> resolve_token_group(const std::vector<std::string>& forms,
                                         const TokenizerAdapter& tok);

}  // namespace pathcal
