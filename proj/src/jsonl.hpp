#pragma once

// Internal helpers for the line-delimited JSON data files.

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "valsim/error.hpp"

namespace valsim::detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Calls fn(record, line_number) for every non-blank, non-comment line.
template <typename Fn>
void for_each_jsonl(std::string_view text, std::string_view source, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string_view::npos || line[first] == '#') continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!record.is_object())
      throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": record is not an object");
    fn(record, line_no);
  }
}

inline std::string require_string(const nlohmann::json& record, const char* field,
                                  std::string_view source, std::size_t line_no) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string())
    throw ConfigError(std::string(source) + ":" + std::to_string(line_no) + ": missing string field '" +
                      field + "'");
  return it->get<std::string>();
}

}  // namespace valsim::detail
