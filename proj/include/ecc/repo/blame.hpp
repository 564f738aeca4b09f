#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>

#include "ecc/repo/patch.hpp"
#include "ecc/repo/snapshot.hpp"

namespace ecc {

/// Memoizes `compare` by (older id, newer id). Version ids name immutable
/// content (synthetic ids embed the patch hash), so entries never go stale.
class ComparisonCache {
 public:
  std::shared_ptr<const Comparison> get(const Version& a, const Version& b) {
    auto key = std::make_pair(a.id, b.id);
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    auto computed = std::make_shared<const Comparison>(compare(a.snapshot, b.snapshot));
    std::lock_guard lock(mu_);
    return cache_.try_emplace(std::move(key), std::move(computed)).first->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return cache_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<std::pair<std::string, std::string>, std::shared_ptr<const Comparison>> cache_;
};

/// For each line of version `at`, the index of the version that introduced it:
/// the line is followed backward through successive line mappings until its
/// image is absent from the parent (or version 0 is reached).
inline std::map<LineRef, int> blame(const LinearHistory& history, int at, const LineSet& lines,
                                    ComparisonCache& cache) {
  const auto& target = history.at(at);
  std::map<LineRef, int> out;
  for (const auto& line : lines) {
    if (!target->snapshot.has_line(line)) {
      throw std::invalid_argument("line " + line.str() + " not present in version " + target->id);
    }
  }
  for (const auto& line : lines) {
    LineRef cur = line;
    int k = at;
    while (k > 0) {
      auto step = cache.get(*history[k - 1], *history[k]);
      auto prev = step->mapping.backward(cur);
      if (!prev) break;
      cur = *prev;
      --k;
    }
    out.emplace(line, k);
  }
  return out;
}

inline std::map<LineRef, int> blame(const LinearHistory& history, int at, const LineSet& lines) {
  ComparisonCache cache;
  return blame(history, at, lines, cache);
}

}  // namespace ecc
