#include "pathcal/marker_lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <set>

namespace pathcal {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

void validate_form(const SurfaceForm& form) {
  if (form.text.empty() || is_space(form.text.front()) || is_space(form.text.back())) {
    throw FormatError("surface form must be non-empty without surrounding whitespace: '" +
                      form.text + "'");
  }
  if (form.category == MarkerCategory::kRevision) {
    if (!(form.weight >= 1.0)) {
      throw FormatError("revision weight must be >= 1.0 for '" + form.text + "'");
    }
  } else if (form.weight != 1.0) {
    throw FormatError("only revision forms carry a weight; got " +
                      std::to_string(form.weight) + " for '" + form.text + "'");
  }
}

// Length in bytes of the UTF-8 sequence starting with `lead`.
std::size_t utf8_len(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::string_view to_string(MarkerCategory category) {
  switch (category) {
    case MarkerCategory::kContinuation:
      return "continuation";
    case MarkerCategory::kRevision:
      return "revision";
    case MarkerCategory::kAlternative:
      return "alternative";
  }
  return "?";
}

MarkerCategory parse_category(std::string_view text) {
  if (text == "continuation") return MarkerCategory::kContinuation;
  if (text == "revision") return MarkerCategory::kRevision;
  if (text == "alternative") return MarkerCategory::kAlternative;
  throw FormatError("unknown marker category '" + std::string(text) + "'");
}

std::vector<SurfaceForm> default_lexicon() {
  using C = MarkerCategory;
  return {
      {"So", C::kContinuation, 1.0},        {"so", C::kContinuation, 1.0},
      {"Therefore", C::kContinuation, 1.0}, {"therefore", C::kContinuation, 1.0},
      {"Thus", C::kContinuation, 1.0},      {"But", C::kRevision, 1.0},
      {"but", C::kRevision, 1.5},           {"However", C::kRevision, 1.0},
      {"however", C::kRevision, 1.0},       {"no", C::kRevision, 1.5},
      {"Alternatively", C::kAlternative, 1.0},
      {"alternatively", C::kAlternative, 1.0},
  };
}

std::vector<SurfaceForm> load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open lexicon file " + path.string());
  std::vector<SurfaceForm> forms;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = strip_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected <category>\\t<form>\\t<weight>");
    }
    SurfaceForm form;
    form.category = parse_category(fields[0]);
    form.text = std::string(fields[1]);
    try {
      std::size_t used = 0;
      form.weight = std::stod(std::string(fields[2]), &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad weight");
    }
    validate_form(form);
    forms.push_back(std::move(form));
  }
  return forms;
}

TokenizerAdapter::TokenizerAdapter(EncodeFn encode, std::optional<TokenId> unknown_id,
                                   std::size_t vocab_size)
    : encode_(std::move(encode)), unknown_id_(unknown_id), vocab_size_(vocab_size) {
  if (!encode_) throw std::invalid_argument("TokenizerAdapter needs an encode function");
  if (vocab_size_ == 0) throw std::invalid_argument("TokenizerAdapter needs vocab_size > 0");
}

VocabTokenizer::VocabTokenizer(std::vector<std::pair<std::string, TokenId>> entries,
                               TokenId unknown_id)
    : unknown_id_(unknown_id) {
  TokenId max_id = unknown_id;
  for (const auto& [text, id] : entries) {
    if (text.empty()) throw FormatError("empty token string in vocabulary");
    if (id < 0) throw FormatError("negative token id for '" + text + "'");
    if (!by_text_.emplace(text, id).second) {
      throw FormatError("duplicate token string '" + escape_token(text) + "'");
    }
    max_id = std::max(max_id, id);
    max_token_len_ = std::max(max_token_len_, text.size());
  }
  vocab_size_ = static_cast<std::size_t>(max_id) + 1;
  by_id_.assign(vocab_size_, std::string());
  std::vector<bool> seen(vocab_size_, false);
  for (const auto& [text, id] : entries) {
    if (seen[id]) throw FormatError("duplicate token id " + std::to_string(id));
    seen[id] = true;
    by_id_[id] = text;
  }
}

std::vector<TokenId> VocabTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> ids;
  std::size_t pos = 0;
  std::string probe;
  while (pos < text.size()) {
    std::size_t longest = std::min(max_token_len_, text.size() - pos);
    bool matched = false;
    for (std::size_t len = longest; len > 0; --len) {
      probe.assign(text.substr(pos, len));
      if (auto it = by_text_.find(probe); it != by_text_.end()) {
        ids.push_back(it->second);
        pos += len;
        matched = true;
        break;
      }
    }
    if (!matched) {
      ids.push_back(unknown_id_);
      pos += std::min(utf8_len(static_cast<unsigned char>(text[pos])), text.size() - pos);
    }
  }
  return ids;
}

std::string VocabTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id >= 0 && static_cast<std::size_t>(id) < by_id_.size()) out += by_id_[id];
  }
  return out;
}

const std::string& VocabTokenizer::token_text(TokenId id) const {
  static const std::string kEmpty;
  if (id < 0 || static_cast<std::size_t>(id) >= by_id_.size()) return kEmpty;
  return by_id_[id];
}

TokenizerAdapter VocabTokenizer::adapter() const {
  // The adapter shares the table by value; VocabTokenizer is immutable.
  auto self = std::make_shared<const VocabTokenizer>(*this);
  return TokenizerAdapter([self](std::string_view s) { return self->encode(s); },
                          unknown_id_, vocab_size_);
}

std::string unescape_token(std::string_view escaped) {
  std::string out;
  for (std::size_t i = 0; i < escaped.size(); ++i) {
    char c = escaped[i];
    if (c != '\\') {
      out += c;
      continue;
    }
    if (i + 1 >= escaped.size()) throw FormatError("dangling escape in token");
    switch (escaped[++i]) {
      case 's':
        out += ' ';
        break;
      case 't':
        out += '\t';
        break;
      case 'n':
        out += '\n';
        break;
      case '\\':
        out += '\\';
        break;
      default:
        throw FormatError(std::string("unknown escape \\") + escaped[i]);
    }
  }
  return out;
}

std::string escape_token(std::string_view raw) {
  std::string out;
  for (char c : raw) {
    switch (c) {
      case ' ':
        out += "\\s";
        break;
      case '\t':
        out += "\\t";
        break;
      case '\n':
        out += "\\n";
        break;
      case '\\':
        out += "\\\\";
        break;
      default:
        out += c;
    }
  }
  return out;
}

VocabTokenizer load_vocab_tokenizer(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary file " + path.string());
  std::vector<std::pair<std::string, TokenId>> entries;
  std::optional<TokenId> unk;
  std::string raw;
  int line_no = 0;
  auto parse_id = [&](std::string_view field) {
    try {
      std::size_t used = 0;
      long v = std::stol(std::string(field), &used);
      if (used != field.size() || v < 0 || v > INT32_MAX) throw std::out_of_range("id");
      return static_cast<TokenId>(v);
    } catch (const std::logic_error&) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad token id '" +
                        std::string(field) + "'");
    }
  };
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = strip_cr(raw);
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected <token>\\t<id>");
    }
    if (fields[0] == "#unk") {
      unk = parse_id(fields[1]);
      continue;
    }
    entries.emplace_back(unescape_token(fields[0]), parse_id(fields[1]));
  }
  if (entries.empty()) throw FormatError("vocabulary file " + path.string() + " is empty");
  if (!unk) {
    TokenId max_id = 0;
    for (const auto& e : entries) max_id = std::max(max_id, e.second);
    unk = max_id + 1;
  }
  for (const auto& e : entries) {
    if (e.second == *unk) throw FormatError("unknown id collides with '" + e.first + "'");
  }
  return VocabTokenizer(std::move(entries), *unk);
}

VocabTokenizer vocab_from_strings(const std::vector<std::string>& tokens, TokenId unknown_id) {
  std::vector<std::pair<std::string, TokenId>> entries;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].empty()) continue;  // unnamed ids stay out of the string table
    entries.emplace_back(tokens[i], static_cast<TokenId>(i));
  }
  return VocabTokenizer(std::move(entries), unknown_id);
}

bool ResolvedMarkers::contains(TokenId id) const {
  if (std::binary_search(continuation.begin(), continuation.end(), id)) return true;
  if (std::binary_search(alternative.begin(), alternative.end(), id)) return true;
  return std::binary_search(revision.begin(), revision.end(), std::pair<TokenId, double>{id, 0.0},
                            [](const auto& a, const auto& b) { return a.first < b.first; });
}

std::vector<TokenId> ResolvedMarkers::all_ids() const {
  std::vector<TokenId> ids(continuation);
  for (const auto& [id, w] : revision) ids.push_back(id);
  ids.insert(ids.end(), alternative.begin(), alternative.end());
  std::sort(ids.begin(), ids.end());
  return ids;
}

namespace {

// Single-token realizations of `text` and " " + `text`.
std::vector<TokenId> single_token_ids(const std::string& text, const TokenizerAdapter& tok) {
  std::vector<TokenId> out;
  for (const std::string& variant : {text, " " + text}) {
    auto ids = tok.encode(variant);
    if (ids.size() != 1) continue;
    if (tok.unknown_id() && ids[0] == *tok.unknown_id()) continue;
    if (ids[0] < 0 || static_cast<std::size_t>(ids[0]) >= tok.vocab_size()) continue;
    out.push_back(ids[0]);
  }
  return out;
}

}  // namespace

ResolvedMarkers resolve_markers(const std::vector<SurfaceForm>& forms,
                                const TokenizerAdapter& tok) {
  if (forms.empty()) throw std::invalid_argument("resolve_markers: empty lexicon");
  std::set<TokenId> continuation;
  std::set<TokenId> alternative;
  std::map<TokenId, double> revision;
  std::map<TokenId, MarkerCategory> owner;
  std::map<TokenId, std::string> owner_form;

  for (const auto& form : forms) {
    validate_form(form);
    for (TokenId id : single_token_ids(form.text, tok)) {
      auto [it, inserted] = owner.emplace(id, form.category);
      if (!inserted && it->second != form.category) {
        throw OverlapError("token id " + std::to_string(id) + " resolves as both " +
                           std::string(to_string(it->second)) + " ('" + owner_form[id] +
                           "') and " + std::string(to_string(form.category)) + " ('" +
                           form.text + "')");
      }
      owner_form.emplace(id, form.text);
      switch (form.category) {
        case MarkerCategory::kContinuation:
          continuation.insert(id);
          break;
        case MarkerCategory::kAlternative:
          alternative.insert(id);
          break;
        case MarkerCategory::kRevision: {
          auto [rit, fresh] = revision.emplace(id, form.weight);
          if (!fresh) rit->second = std::max(rit->second, form.weight);
          break;
        }
      }
    }
  }

  auto require = [](bool non_empty, MarkerCategory c) {
    if (!non_empty) {
      throw EmptyCategoryError(std::string(to_string(c)) +
                               " markers resolve to no single-token ids");
    }
  };
  require(!continuation.empty(), MarkerCategory::kContinuation);
  require(!revision.empty(), MarkerCategory::kRevision);
  require(!alternative.empty(), MarkerCategory::kAlternative);

  ResolvedMarkers out;
  out.continuation.assign(continuation.begin(), continuation.end());
  out.revision.assign(revision.begin(), revision.end());
  out.alternative.assign(alternative.begin(), alternative.end());
  return out;
}

std::vector<TokenId> resolve_token_group(const std::vector<std::string>& forms,
                                         const TokenizerAdapter& tok) {
  std::set<TokenId> ids;
  for (const auto& form : forms) {
    for (TokenId id : single_token_ids(form, tok)) ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

}  // namespace pathcal
