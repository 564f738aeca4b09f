#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "ecc/core/text.hpp"
#include "ecc/repo/snapshot.hpp"

namespace ecc::git {

class CoverageParseError : public std::runtime_error {
 public:
  CoverageParseError(int line, const std::string& msg)
      : std::runtime_error("coverage line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline bool parse_count(std::string_view s, std::int64_t& out) {
  if (s.empty() || s.size() > 18) return false;
  out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  return true;
}

}  // namespace detail

/// Lines with a positive hit count, from the LCOV subset: `SF:<path>` opens a
/// record, `DA:<line>,<hits>[,<checksum>]` adds a line, `end_of_record` closes
/// it. Every other line is ignored.
inline LineSet parse_coverage(std::string_view content) {
  LineSet out;
  std::string file;
  bool open = false;
  int n = 0;
  for (const auto& raw : text::split_lines(content)) {
    ++n;
    const std::string_view line = text::trim(raw);
    if (text::starts_with(line, "SF:")) {
      if (open) throw CoverageParseError(n, "SF inside an open record");
      file = std::string(line.substr(3));
      if (file.empty()) throw CoverageParseError(n, "empty SF path");
      open = true;
    } else if (text::starts_with(line, "DA:")) {
      if (!open) throw CoverageParseError(n, "DA before SF");
      auto fields = text::split(line.substr(3), ',');
      std::int64_t at = 0;
      std::int64_t hits = 0;
      if (fields.size() < 2 || fields.size() > 3 || !detail::parse_count(fields[0], at) ||
          !detail::parse_count(fields[1], hits) || at < 1 || at > INT32_MAX) {
        throw CoverageParseError(n, "malformed DA record '" + std::string(line) + "'");
      }
      if (hits > 0) out.insert({file, static_cast<int>(at)});
    } else if (line == "end_of_record") {
      if (!open) throw CoverageParseError(n, "end_of_record without SF");
      open = false;
    }
  }
  if (open) throw CoverageParseError(n, "missing end_of_record");
  return out;
}

}  // namespace ecc::git
