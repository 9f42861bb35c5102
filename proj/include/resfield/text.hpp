#pragma once

// Small text helpers shared by the file formats: a minimal CSV reader that
// skips '#' comment lines, and shortest round-trip double formatting.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "resfield/error.hpp"

namespace resfield {

inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw NumericalError("cannot format double");
  return std::string(buf, ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view text, const char* what) {
  text = trim(text);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(std::string(what) + ": cannot parse '" + std::string(text) + "' as a number");
  return value;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

class CsvReader {
 public:
  explicit CsvReader(std::string_view document) : doc_(document) {
    auto first = next_line();
    if (!first) throw ParseError("CSV document has no header");
    header_ = split_csv_line(*first);
  }

  const std::vector<std::string>& header() const { return header_; }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw ParseError("CSV header lacks column '" + std::string(name) + "'");
  }

  std::optional<std::vector<std::string>> next() {
    auto line = next_line();
    if (!line) return std::nullopt;
    auto fields = split_csv_line(*line);
    if (fields.size() != header_.size())
      throw ParseError("CSV line " + std::to_string(line_no_) + ": expected " + std::to_string(header_.size()) +
                       " fields, got " + std::to_string(fields.size()));
    return fields;
  }

  /// Comment lines ('#'-prefixed) seen so far, without the leading marker.
  const std::vector<std::string>& comments() const { return comments_; }

 private:
  std::optional<std::string_view> next_line() {
    while (pos_ < doc_.size()) {
      auto nl = doc_.find('\n', pos_);
      if (nl == std::string_view::npos) nl = doc_.size();
      std::string_view line = doc_.substr(pos_, nl - pos_);
      pos_ = nl + 1;
      ++line_no_;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (trim(line).empty()) continue;
      if (line.front() == '#') {
        line.remove_prefix(1);
        comments_.emplace_back(trim(line));
        continue;
      }
      return line;
    }
    return std::nullopt;
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
  std::vector<std::string> header_;
  std::vector<std::string> comments_;
};

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("io", "write to '" + path + "' failed");
}

}  // namespace resfield
