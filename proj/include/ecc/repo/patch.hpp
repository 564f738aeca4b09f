#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ecc/core/hash.hpp"
#include "ecc/core/result.hpp"
#include "ecc/repo/myers.hpp"
#include "ecc/repo/snapshot.hpp"

namespace ecc {

inline constexpr int kContextLines = 3;

/// One contiguous change region of a file.
struct Hunk {
  int src_start = 1;  // first deleted line, or insertion point
  std::vector<std::string> deleted_lines;
  int dst_start = 1;  // first added line in destination coordinates
  std::vector<std::string> added_lines;
  std::vector<std::string> context_before;
  std::vector<std::string> context_after;

  bool operator==(const Hunk&) const = default;
};

enum class FileChange { modify, create, remove };

struct FilePatch {
  std::string path_src;  // empty when the file is created
  std::string path_dst;  // empty when the file is removed
  std::vector<Hunk> hunks;

  FileChange change() const {
    if (path_src.empty()) return FileChange::create;
    if (path_dst.empty()) return FileChange::remove;
    return FileChange::modify;
  }
  const std::string& path() const { return path_src.empty() ? path_dst : path_src; }

  bool operator==(const FilePatch&) const = default;
};

/// Line-level delta between two snapshots.
struct Patch {
  std::vector<FilePatch> file_patches;

  bool empty() const noexcept { return file_patches.empty(); }

  /// Deleted lines, in source coordinates.
  LineSet deleted() const {
    LineSet out;
    for (const auto& fp : file_patches) {
      if (fp.path_src.empty()) continue;
      for (const auto& h : fp.hunks) {
        for (std::size_t k = 0; k < h.deleted_lines.size(); ++k) {
          out.insert({fp.path_src, h.src_start + static_cast<int>(k)});
        }
      }
    }
    return out;
  }

  /// Added lines, in destination coordinates.
  LineSet added() const {
    LineSet out;
    for (const auto& fp : file_patches) {
      if (fp.path_dst.empty()) continue;
      for (const auto& h : fp.hunks) {
        for (std::size_t k = 0; k < h.added_lines.size(); ++k) {
          out.insert({fp.path_dst, h.dst_start + static_cast<int>(k)});
        }
      }
    }
    return out;
  }

  bool operator==(const Patch&) const = default;
};

/// Unified-diff style rendering; also the input of `patch_hash`.
inline std::string to_text(const Patch& patch) {
  std::ostringstream os;
  for (const auto& fp : patch.file_patches) {
    os << "--- " << (fp.path_src.empty() ? "/dev/null" : "a/" + fp.path_src) << '\n';
    os << "+++ " << (fp.path_dst.empty() ? "/dev/null" : "b/" + fp.path_dst) << '\n';
    for (const auto& h : fp.hunks) {
      const int before = static_cast<int>(h.context_before.size());
      const int after = static_cast<int>(h.context_after.size());
      const int src_len = before + static_cast<int>(h.deleted_lines.size()) + after;
      const int dst_len = before + static_cast<int>(h.added_lines.size()) + after;
      os << "@@ -" << (h.src_start - before) << ',' << src_len << " +"
         << (h.dst_start - before) << ',' << dst_len << " @@\n";
      for (const auto& l : h.context_before) os << ' ' << l << '\n';
      for (const auto& l : h.deleted_lines) os << '-' << l << '\n';
      for (const auto& l : h.added_lines) os << '+' << l << '\n';
      for (const auto& l : h.context_after) os << ' ' << l << '\n';
    }
  }
  return os.str();
}

inline std::string patch_hash(const Patch& patch) { return hash_hex(to_text(patch), 12); }

/// Injective, order-preserving mapping between lines left untouched by a diff.
/// Renames are not detected, so mapped lines always share their path.
class LineMapping {
 public:
  std::optional<LineRef> forward(const LineRef& src) const { return lookup(forward_, src); }
  std::optional<LineRef> backward(const LineRef& dst) const { return lookup(backward_, dst); }

  bool contains(const LineRef& src, const LineRef& dst) const {
    auto f = forward(src);
    return f && *f == dst;
  }

  /// True when `src` names an existing source line that has no image.
  bool unmapped_source(const LineRef& src) const { return unmapped(forward_, src); }
  bool unmapped_destination(const LineRef& dst) const { return unmapped(backward_, dst); }

  std::vector<std::pair<LineRef, LineRef>> pairs() const {
    std::vector<std::pair<LineRef, LineRef>> out;
    for (const auto& [path, lines] : forward_) {
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i] != 0) out.push_back({{path, static_cast<int>(i) + 1}, {path, lines[i]}});
      }
    }
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& [_, lines] : forward_) {
      n += static_cast<std::size_t>(std::count_if(lines.begin(), lines.end(), [](int x) { return x != 0; }));
    }
    return n;
  }

  LineSet map_forward(const LineSet& lines) const {
    LineSet out;
    for (const auto& l : lines) {
      if (auto m = forward(l)) out.insert(*m);
    }
    return out;
  }

  // Construction helpers used by diff.
  void add_source_file(const std::string& path, std::size_t lines) { forward_[path].assign(lines, 0); }
  void add_destination_file(const std::string& path, std::size_t lines) { backward_[path].assign(lines, 0); }
  void link(const std::string& path, int src_line, int dst_line) {
    forward_[path][static_cast<std::size_t>(src_line - 1)] = dst_line;
    backward_[path][static_cast<std::size_t>(dst_line - 1)] = src_line;
  }

 private:
  using Table = std::map<std::string, std::vector<int>>;

  static std::optional<LineRef> lookup(const Table& t, const LineRef& ref) {
    auto it = t.find(ref.path);
    if (it == t.end() || ref.line < 1 || static_cast<std::size_t>(ref.line) > it->second.size()) {
      return std::nullopt;
    }
    int target = it->second[static_cast<std::size_t>(ref.line - 1)];
    if (target == 0) return std::nullopt;
    return LineRef{ref.path, target};
  }

  static bool unmapped(const Table& t, const LineRef& ref) {
    auto it = t.find(ref.path);
    if (it == t.end() || ref.line < 1 || static_cast<std::size_t>(ref.line) > it->second.size()) {
      return false;
    }
    return it->second[static_cast<std::size_t>(ref.line - 1)] == 0;
  }

  Table forward_;
  Table backward_;
};

/// Result of comparing two snapshots: the patch and the unchanged-line mapping
/// derived from the same alignment.
struct Comparison {
  Patch patch;
  LineMapping mapping;

  /// Line of the older side that the patch deletes (element of L_src).
  bool deletes(const LineRef& src) const { return mapping.unmapped_source(src); }
  /// Line of the newer side that the patch adds (element of L_dst).
  bool adds(const LineRef& dst) const { return mapping.unmapped_destination(dst); }
};

namespace detail {

inline std::vector<std::string> slice(const std::vector<std::string>& v, int begin, int end) {
  return {v.begin() + begin, v.begin() + end};
}

inline FilePatch diff_file(const std::string& path, const std::vector<std::string>& a,
                           const std::vector<std::string>& b, const MatchList& matches) {
  FilePatch fp{path, path, {}};
  struct Region {
    int a_begin, a_end, b_begin, b_end;
  };
  std::vector<Region> regions;
  int ia = 0;
  int ib = 0;
  auto flush = [&](int a_to, int b_to) {
    if (a_to > ia || b_to > ib) regions.push_back({ia, a_to, ib, b_to});
  };
  for (auto [i, j] : matches) {
    flush(i, j);
    ia = i + 1;
    ib = j + 1;
  }
  flush(static_cast<int>(a.size()), static_cast<int>(b.size()));

  for (std::size_t r = 0; r < regions.size(); ++r) {
    const auto& reg = regions[r];
    const int prev_end = r == 0 ? 0 : regions[r - 1].a_end;
    const int next_begin = r + 1 < regions.size() ? regions[r + 1].a_begin : static_cast<int>(a.size());
    const int ctx_begin = std::max(prev_end, reg.a_begin - kContextLines);
    const int ctx_end = std::min(next_begin, reg.a_end + kContextLines);
    Hunk h;
    h.src_start = reg.a_begin + 1;
    h.deleted_lines = slice(a, reg.a_begin, reg.a_end);
    h.dst_start = reg.b_begin + 1;
    h.added_lines = slice(b, reg.b_begin, reg.b_end);
    h.context_before = slice(a, ctx_begin, reg.a_begin);
    h.context_after = slice(a, reg.a_end, ctx_end);
    fp.hunks.push_back(std::move(h));
  }
  return fp;
}

}  // namespace detail

/// Minimal line diff of every file plus the mapping of untouched lines.
inline Comparison compare(const Snapshot& a, const Snapshot& b) {
  Comparison out;
  const auto& fa = a.files();
  const auto& fb = b.files();
  std::set<std::string> paths;
  for (const auto& [p, _] : fa) paths.insert(p);
  for (const auto& [p, _] : fb) paths.insert(p);

  for (const auto& path : paths) {
    auto ita = fa.find(path);
    auto itb = fb.find(path);
    if (ita != fa.end()) out.mapping.add_source_file(path, ita->second.size());
    if (itb != fb.end()) out.mapping.add_destination_file(path, itb->second.size());

    if (ita == fa.end()) {
      FilePatch fp{"", path, {}};
      if (!itb->second.empty()) {
        Hunk h;
        h.src_start = 1;
        h.dst_start = 1;
        h.added_lines = itb->second;
        fp.hunks.push_back(std::move(h));
      }
      out.patch.file_patches.push_back(std::move(fp));
      continue;
    }
    if (itb == fb.end()) {
      FilePatch fp{path, "", {}};
      if (!ita->second.empty()) {
        Hunk h;
        h.src_start = 1;
        h.dst_start = 1;
        h.deleted_lines = ita->second;
        fp.hunks.push_back(std::move(h));
      }
      out.patch.file_patches.push_back(std::move(fp));
      continue;
    }

    const auto& la = ita->second;
    const auto& lb = itb->second;
    if (la == lb) {
      for (std::size_t i = 0; i < la.size(); ++i) {
        out.mapping.link(path, static_cast<int>(i) + 1, static_cast<int>(i) + 1);
      }
      continue;
    }
    auto matches = detail::match_lines(la, lb);
    for (auto [i, j] : matches) out.mapping.link(path, i + 1, j + 1);
    out.patch.file_patches.push_back(detail::diff_file(path, la, lb, matches));
  }
  return out;
}

inline Patch diff(const Snapshot& a, const Snapshot& b) { return compare(a, b).patch; }

inline LineMapping map_lines(const Snapshot& a, const Snapshot& b) { return compare(a, b).mapping; }

/// A hunk that has no unique exact match site in the base.
struct ApplyFailure {
  std::string path;
  int hunk = -1;  // -1 for file-level failures
  std::string reason;

  std::string message() const {
    std::string out = path;
    if (hunk >= 0) out += " hunk " + std::to_string(hunk + 1);
    return out + ": " + reason;
  }
};

namespace detail {

inline bool block_matches(const std::vector<std::string>& file, int pos,
                          const std::vector<std::string>& block) {
  if (pos < 0 || pos + static_cast<int>(block.size()) > static_cast<int>(file.size())) return false;
  return std::equal(block.begin(), block.end(), file.begin() + pos);
}

inline Result<std::vector<std::string>, ApplyFailure> apply_hunks(
    const std::string& path, const std::vector<std::string>& file, const std::vector<Hunk>& hunks) {
  struct Placement {
    int block_begin, del_begin, del_end, block_end;
  };
  std::vector<Placement> placed;
  for (std::size_t hi = 0; hi < hunks.size(); ++hi) {
    const Hunk& h = hunks[hi];
    std::vector<std::string> block = h.context_before;
    block.insert(block.end(), h.deleted_lines.begin(), h.deleted_lines.end());
    block.insert(block.end(), h.context_after.begin(), h.context_after.end());

    const int recorded = h.src_start - 1 - static_cast<int>(h.context_before.size());
    int pos = -1;
    if (block_matches(file, recorded, block)) {
      pos = recorded;
    } else {
      int found = 0;
      const int last = static_cast<int>(file.size()) - static_cast<int>(block.size());
      for (int p = 0; p <= last; ++p) {
        if (block_matches(file, p, block)) {
          if (++found > 1) break;
          pos = p;
        }
      }
      if (found == 0) return ApplyFailure{path, static_cast<int>(hi), "no match site"};
      if (found > 1) return ApplyFailure{path, static_cast<int>(hi), "ambiguous match site"};
    }
    const int del_begin = pos + static_cast<int>(h.context_before.size());
    const int del_end = del_begin + static_cast<int>(h.deleted_lines.size());
    placed.push_back({pos, del_begin, del_end, pos + static_cast<int>(block.size())});
  }

  for (std::size_t i = 0; i < placed.size(); ++i) {
    if (i > 0 && placed[i].del_begin < placed[i - 1].del_end) {
      return ApplyFailure{path, static_cast<int>(i), "hunks overlap or are out of order"};
    }
    if (i > 0 && placed[i].del_begin == placed[i - 1].del_begin &&
        placed[i].del_end == placed[i].del_begin && placed[i - 1].del_end == placed[i - 1].del_begin) {
      return ApplyFailure{path, static_cast<int>(i), "insertions collide"};
    }
    for (std::size_t j = 0; j < placed.size(); ++j) {
      if (j == i) continue;
      const bool ctx_overlaps_delete =
          (placed[i].block_begin < placed[j].del_end && placed[j].del_begin < placed[i].del_begin) ||
          (placed[i].del_end < placed[j].del_end && placed[j].del_begin < placed[i].block_end);
      if (ctx_overlaps_delete) {
        return ApplyFailure{path, static_cast<int>(i), "context overlaps another hunk"};
      }
    }
  }

  std::vector<std::string> out;
  out.reserve(file.size());
  int cursor = 0;
  for (std::size_t i = 0; i < placed.size(); ++i) {
    out.insert(out.end(), file.begin() + cursor, file.begin() + placed[i].del_begin);
    out.insert(out.end(), hunks[i].added_lines.begin(), hunks[i].added_lines.end());
    cursor = placed[i].del_end;
  }
  out.insert(out.end(), file.begin() + cursor, file.end());
  return out;
}

}  // namespace detail

/// Applies `patch` with zero fuzz: each hunk must match its context and deleted
/// lines exactly, at the recorded position or at a unique relocated one.
inline Result<Snapshot, ApplyFailure> apply_patch(const Snapshot& base, const Patch& patch) {
  Snapshot out = base;
  for (const auto& fp : patch.file_patches) {
    const auto* existing = base.file(fp.path());
    switch (fp.change()) {
      case FileChange::create: {
        if (existing != nullptr) return ApplyFailure{fp.path_dst, -1, "file already exists"};
        std::vector<std::string> lines;
        for (const auto& h : fp.hunks) lines.insert(lines.end(), h.added_lines.begin(), h.added_lines.end());
        out.set_file(fp.path_dst, std::move(lines));
        break;
      }
      case FileChange::remove: {
        if (existing == nullptr) return ApplyFailure{fp.path_src, -1, "file does not exist"};
        std::vector<std::string> expected;
        for (const auto& h : fp.hunks) {
          expected.insert(expected.end(), h.deleted_lines.begin(), h.deleted_lines.end());
        }
        if (*existing != expected) return ApplyFailure{fp.path_src, 0, "removed content differs"};
        out.remove_file(fp.path_src);
        break;
      }
      case FileChange::modify: {
        if (existing == nullptr) return ApplyFailure{fp.path_src, -1, "file does not exist"};
        auto patched = detail::apply_hunks(fp.path_src, *existing, fp.hunks);
        if (!patched) return patched.error();
        out.set_file(fp.path_dst, std::move(patched).value());
        break;
      }
    }
  }
  return out;
}

}  // namespace ecc
