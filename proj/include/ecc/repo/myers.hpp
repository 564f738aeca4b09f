#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ecc::detail {

using MatchList = std::vector<std::pair<int, int>>;

// Greedy O((N+M)D) shortest edit script over interned symbols. Returns the
// matched (a, b) index pairs of one shortest edit script, in increasing order.
inline MatchList myers_core(std::span<const int> a, std::span<const int> b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  MatchList matches;
  if (n == 0 || m == 0) return matches;

  const int max = n + m;
  const int off = max + 1;
  std::vector<int> v(static_cast<std::size_t>(2 * max + 3), 0);
  // trace[d][k + d] = furthest x on diagonal k after round d
  std::vector<std::vector<int>> trace;
  int final_d = -1;
  for (int d = 0; d <= max && final_d < 0; ++d) {
    for (int k = -d; k <= d; k += 2) {
      int x;
      if (k == -d || (k != d && v[off + k - 1] < v[off + k + 1])) {
        x = v[off + k + 1];
      } else {
        x = v[off + k - 1] + 1;
      }
      int y = x - k;
      while (x < n && y < m && a[x] == b[y]) {
        ++x;
        ++y;
      }
      v[off + k] = x;
      if (x >= n && y >= m) final_d = d;
    }
    trace.emplace_back(v.begin() + (off - d), v.begin() + (off + d + 1));
  }

  int x = n;
  int y = m;
  for (int d = final_d; d > 0; --d) {
    const auto& prev = trace[static_cast<std::size_t>(d - 1)];
    const int k = x - y;
    auto at = [&](int kk) { return prev[static_cast<std::size_t>(kk + d - 1)]; };
    const bool down = k == -d || (k != d && at(k - 1) < at(k + 1));
    const int prev_k = down ? k + 1 : k - 1;
    const int prev_x = at(prev_k);
    const int prev_y = prev_x - prev_k;
    const int start_x = down ? prev_x : prev_x + 1;
    while (x > start_x) {
      matches.emplace_back(x - 1, y - 1);
      --x;
      --y;
    }
    x = prev_x;
    y = prev_y;
  }
  while (x > 0 && y > 0) {
    matches.emplace_back(x - 1, y - 1);
    --x;
    --y;
  }
  std::reverse(matches.begin(), matches.end());
  return matches;
}

/// Matched line pairs of a minimal line diff between `a` and `b`.
inline MatchList match_lines(std::span<const std::string> a, std::span<const std::string> b) {
  const int n = static_cast<int>(a.size());
  const int m = static_cast<int>(b.size());
  int prefix = 0;
  while (prefix < n && prefix < m && a[prefix] == b[prefix]) ++prefix;
  int suffix = 0;
  while (suffix < n - prefix && suffix < m - prefix &&
         a[n - 1 - suffix] == b[m - 1 - suffix]) {
    ++suffix;
  }

  MatchList out;
  out.reserve(static_cast<std::size_t>(prefix + suffix));
  for (int i = 0; i < prefix; ++i) out.emplace_back(i, i);

  const int mid_a = n - prefix - suffix;
  const int mid_b = m - prefix - suffix;
  if (mid_a > 0 && mid_b > 0) {
    std::unordered_map<std::string_view, int> intern;
    auto symbol = [&](const std::string& s) {
      auto [it, inserted] = intern.try_emplace(s, static_cast<int>(intern.size()));
      return it->second;
    };
    std::vector<int> sa(static_cast<std::size_t>(mid_a));
    std::vector<int> sb(static_cast<std::size_t>(mid_b));
    for (int i = 0; i < mid_a; ++i) sa[static_cast<std::size_t>(i)] = symbol(a[prefix + i]);
    for (int j = 0; j < mid_b; ++j) sb[static_cast<std::size_t>(j)] = symbol(b[prefix + j]);
    for (auto [i, j] : myers_core(sa, sb)) out.emplace_back(i + prefix, j + prefix);
  }

  for (int s = suffix; s > 0; --s) out.emplace_back(n - s, m - s);
  return out;
}

}  // namespace ecc::detail
