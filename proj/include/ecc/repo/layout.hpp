#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecc/core/text.hpp"
#include "ecc/repo/snapshot.hpp"

namespace ecc {

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw LoadError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << content;
}

inline std::string commit_dir_name(int number) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", number);
  return buf;
}

inline std::map<std::string, std::string> parse_meta(const std::string& content,
                                                     const std::string& commit) {
  std::map<std::string, std::string> meta;
  int lineno = 0;
  for (const auto& raw : text::split_lines(content)) {
    ++lineno;
    auto line = text::trim(raw);
    if (line.empty()) continue;
    auto colon = line.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw LoadError("commit " + commit + ": malformed meta line " + std::to_string(lineno));
    }
    std::string key(text::trim(line.substr(0, colon)));
    std::string value(text::trim(line.substr(colon + 1)));
    if (!meta.emplace(key, value).second) {
      throw LoadError("commit " + commit + ": duplicate meta key '" + key + "'");
    }
  }
  for (const char* required : {"id", "author", "message"}) {
    if (!meta.count(required)) {
      throw LoadError("commit " + commit + ": meta is missing '" + required + "'");
    }
  }
  if (meta["id"].empty()) throw LoadError("commit " + commit + ": empty id");
  return meta;
}

}  // namespace detail

/// Reads every regular file below `dir` (except `meta`) into a snapshot.
inline Snapshot read_snapshot(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  Snapshot snap;
  if (!fs::exists(dir)) return snap;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string rel = fs::relative(f, dir).generic_string();
    if (rel == "meta") continue;
    snap.set_file(rel, text::split_lines(detail::read_file(f)));
  }
  return snap;
}

/// Loads `<root>/commits/NNNN/` (1-based, contiguous, 4 digits).
inline LinearHistory load_history(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  const fs::path commits = root / "commits";
  if (!fs::is_directory(commits)) throw LoadError("no commits directory in " + root.string());

  std::vector<int> numbers;
  for (const auto& entry : fs::directory_iterator(commits)) {
    std::string name = entry.path().filename().string();
    const bool four_digits =
        name.size() == 4 && std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; });
    if (!four_digits || !entry.is_directory()) {
      throw LoadError("commit " + name + ": malformed commit directory name");
    }
    numbers.push_back(std::stoi(name));
  }
  std::sort(numbers.begin(), numbers.end());
  if (numbers.empty()) throw LoadError("history has no commits");
  for (std::size_t i = 0; i < numbers.size(); ++i) {
    const int expected = static_cast<int>(i) + 1;
    if (numbers[i] == 0) throw LoadError("commit 0000: numbering starts at 0001");
    if (i > 0 && numbers[i] == numbers[i - 1]) {
      throw LoadError("duplicate commit " + detail::commit_dir_name(numbers[i]));
    }
    if (numbers[i] != expected) throw LoadError("missing commit " + detail::commit_dir_name(expected));
  }

  std::vector<VersionPtr> versions;
  std::set<std::string> ids;
  for (int number : numbers) {
    const std::string name = detail::commit_dir_name(number);
    const fs::path dir = commits / name;
    if (!fs::is_regular_file(dir / "meta")) throw LoadError("commit " + name + ": missing meta");
    auto meta = detail::parse_meta(detail::read_file(dir / "meta"), name);
    if (!ids.insert(meta["id"]).second) throw LoadError("commit " + name + ": duplicate id " + meta["id"]);
    Snapshot snap;
    try {
      snap = read_snapshot(dir);
    } catch (const std::invalid_argument& e) {
      throw LoadError("commit " + name + ": " + e.what());
    }
    versions.push_back(make_version(meta["id"], number - 1, std::move(snap), meta["author"], meta["message"]));
  }
  return LinearHistory(std::move(versions));
}

inline void write_snapshot(const std::filesystem::path& dir, const Snapshot& snap) {
  for (const auto& [path, lines] : snap.files()) detail::write_file(dir / path, text::join_lines(lines));
}

/// Writes the history in the layout `load_history` reads.
inline void write_history(const std::filesystem::path& root, const LinearHistory& history) {
  namespace fs = std::filesystem;
  fs::remove_all(root / "commits");
  for (const auto& v : history.versions()) {
    const fs::path dir = root / "commits" / detail::commit_dir_name(v->index + 1);
    fs::create_directories(dir);
    detail::write_file(dir / "meta", "id: " + v->id + "\nauthor: " + v->author + "\nmessage: " + v->message + "\n");
    write_snapshot(dir, v->snapshot);
  }
}

}  // namespace ecc
