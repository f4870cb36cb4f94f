#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace pathcal {

// Flat "section.key" → raw value view of a TOML-style file:
//   # comment
//   [section]
//   key = value        # bare value
//   name = "quoted"    # quotes stripped, \" and \\ unescaped
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
KeyValues load_key_values(const std::filesystem::path& path);

// "section.key=value" as given to --set.
std::pair<std::string, std::string> parse_assignment(std::string_view text);

}  // namespace pathcal
