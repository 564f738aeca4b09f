#pragma once

#include <compare>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ecc/core/hash.hpp"
#include "ecc/core/text.hpp"

namespace ecc {

/// A line of a file, 1-based.
struct LineRef {
  std::string path;
  int line = 1;

  auto operator<=>(const LineRef&) const = default;

  std::string str() const { return path + ":" + std::to_string(line); }
};

using LineSet = std::set<LineRef>;

inline std::string to_string(const LineSet& lines) {
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out += ',';
    out += l.str();
  }
  return out;
}

/// Relative, `/`-separated, no empty, `.` or `..` segments.
inline bool is_valid_path(std::string_view path) {
  if (path.empty() || path.front() == '/' || path.back() == '/') return false;
  for (const auto& seg : text::split(path, '/')) {
    if (seg.empty() || seg == "." || seg == "..") return false;
  }
  return path.find('\\') == std::string_view::npos;
}

/// Full file-tree content of one program version.
class Snapshot {
 public:
  using Lines = std::vector<std::string>;
  using FileMap = std::map<std::string, Lines>;

  Snapshot() = default;
  explicit Snapshot(FileMap files) : files_(std::move(files)) {
    for (const auto& [path, _] : files_) {
      if (!is_valid_path(path)) throw std::invalid_argument("invalid path: " + path);
    }
  }

  const FileMap& files() const noexcept { return files_; }
  bool empty() const noexcept { return files_.empty(); }

  void set_file(const std::string& path, Lines lines) {
    if (!is_valid_path(path)) throw std::invalid_argument("invalid path: " + path);
    files_[path] = std::move(lines);
  }
  void remove_file(const std::string& path) { files_.erase(path); }

  const Lines* file(const std::string& path) const {
    auto it = files_.find(path);
    return it == files_.end() ? nullptr : &it->second;
  }

  bool has_line(const LineRef& ref) const {
    const Lines* f = file(ref.path);
    return f != nullptr && ref.line >= 1 && static_cast<std::size_t>(ref.line) <= f->size();
  }

  const std::string& line(const LineRef& ref) const {
    if (!has_line(ref)) throw std::out_of_range("no such line: " + ref.str());
    return (*file(ref.path))[static_cast<std::size_t>(ref.line - 1)];
  }

  /// Paths under `dir/` (with the trailing slash implied).
  std::vector<std::string> paths_under(std::string_view dir) const {
    std::vector<std::string> out;
    std::string prefix = std::string(dir) + "/";
    for (const auto& [path, _] : files_) {
      if (text::starts_with(path, prefix)) out.push_back(path);
    }
    return out;
  }

  std::string content_hash() const {
    std::uint64_t h = fnv1a64("");
    for (const auto& [path, lines] : files_) {
      h = fnv1a64(path, h);
      h = fnv1a64(std::string_view("\0", 1), h);
      for (const auto& l : lines) {
        h = fnv1a64(l, h);
        h = fnv1a64("\n", h);
      }
      h = fnv1a64(std::string_view("\0", 1), h);
    }
    return to_hex(h);
  }

  bool operator==(const Snapshot&) const = default;

 private:
  FileMap files_;
};

/// One program version in a linear history, or an engine-created synthetic one.
struct Version {
  std::string id;
  int index = 0;
  std::string author;
  std::string message;
  Snapshot snapshot;
  bool synthetic = false;
  // Revision a synthetic or real version is materialized from (git histories).
  std::string origin;
};

using VersionPtr = std::shared_ptr<const Version>;

inline VersionPtr make_version(std::string id, int index, Snapshot snapshot,
                               std::string author = {}, std::string message = {}) {
  auto v = std::make_shared<Version>();
  v->id = std::move(id);
  v->index = index;
  v->author = std::move(author);
  v->message = std::move(message);
  v->snapshot = std::move(snapshot);
  v->origin = v->id;
  return v;
}

/// First-parent chain of versions; element k's parent is element k-1.
class LinearHistory {
 public:
  LinearHistory() = default;
  explicit LinearHistory(std::vector<VersionPtr> versions) : versions_(std::move(versions)) {
    if (versions_.empty()) throw std::invalid_argument("history must not be empty");
    std::set<std::string> ids;
    for (std::size_t i = 0; i < versions_.size(); ++i) {
      const auto& v = versions_[i];
      if (!v) throw std::invalid_argument("null version in history");
      if (!ids.insert(v->id).second) throw std::invalid_argument("duplicate version id: " + v->id);
      if (v->synthetic) throw std::invalid_argument("synthetic version in history: " + v->id);
      if (v->index != static_cast<int>(i)) {
        throw std::invalid_argument("version " + v->id + " has index " +
                                    std::to_string(v->index) + " at position " +
                                    std::to_string(i));
      }
    }
  }

  int size() const noexcept { return static_cast<int>(versions_.size()); }
  const VersionPtr& operator[](int i) const { return versions_.at(static_cast<std::size_t>(i)); }
  const VersionPtr& at(int i) const {
    if (i < 0 || i >= size()) throw std::out_of_range("version index " + std::to_string(i));
    return versions_[static_cast<std::size_t>(i)];
  }
  const std::vector<VersionPtr>& versions() const noexcept { return versions_; }

  /// Stable fingerprint of the sequence of version ids.
  std::string ids_hash() const {
    std::uint64_t h = fnv1a64("");
    for (const auto& v : versions_) {
      h = fnv1a64(v->id, h);
      h = fnv1a64("\n", h);
    }
    return to_hex(h);
  }

 private:
  std::vector<VersionPtr> versions_;
};

}  // namespace ecc
