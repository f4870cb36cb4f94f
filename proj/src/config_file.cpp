#include "pathcal/config_file.hpp"

#include <fstream>
#include <sstream>

#include "pathcal/types.hpp"

namespace pathcal {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

// Strips a trailing comment that is outside quotes, then quotes.
std::string parse_value(std::string_view raw, int line_no) {
  raw = trim(raw);
  if (!raw.empty() && raw.front() == '"') {
    std::string out;
    for (std::size_t i = 1; i < raw.size(); ++i) {
      char c = raw[i];
      if (c == '\\' && i + 1 < raw.size()) {
        out += raw[++i];
      } else if (c == '"') {
        auto rest = trim(raw.substr(i + 1));
        if (!rest.empty() && rest.front() != '#') {
          throw ConfigError("line " + std::to_string(line_no) + ": text after quoted value");
        }
        return out;
      } else {
        out += c;
      }
    }
    throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
  }
  auto hash = raw.find('#');
  return std::string(trim(raw.substr(0, hash)));
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      auto close = line.find(']');
      if (close == std::string_view::npos) {
        throw ConfigError("line " + std::to_string(line_no) + ": unterminated section header");
      }
      section = std::string(trim(line.substr(1, close - 1)));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    auto key = std::string(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    out[section.empty() ? key : section + "." + key] = parse_value(line.substr(eq + 1), line_no);
  }
  return out;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_values(buf.str());
}

std::pair<std::string, std::string> parse_assignment(std::string_view text) {
  auto eq = text.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("--set expects section.key=value, got '" + std::string(text) + "'");
  }
  return {std::string(trim(text.substr(0, eq))), parse_value(text.substr(eq + 1), 0)};
}

}  // namespace pathcal
