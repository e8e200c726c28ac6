#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ssed::data::detail {

struct Line {
  std::size_t number;  // 1-based
  std::string text;
};

// Non-blank lines that do not start with '#', CR stripped.
std::vector<Line> read_lines(const std::filesystem::path& path);
std::vector<std::string> split_tabs(const std::string& line);
std::string strip(const std::string& s);
std::optional<double> parse_double(const std::string& text);

}  // namespace ssed::data::detail
