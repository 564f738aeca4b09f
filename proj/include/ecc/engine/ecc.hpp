#pragma once

#include <algorithm>
#include <atomic>
#include <set>
#include <stdexcept>
#include <thread>
#include <vector>

#include "ecc/analysis/equality.hpp"
#include "ecc/engine/types.hpp"
#include "ecc/repo/blame.hpp"

namespace ecc::engine {

using analysis::CoverageStore;
using analysis::equal_executions;
using analysis::merge_suites;

struct EarliestBase {
  int index = 0;
  LineSet blamed;  // in v_{n-1} coordinates
  std::vector<std::string> impacted_tests;
};

/// v_e: the latest version introducing any line of the patch or of the
/// coverage of tests whose executions the patch impacts.
inline EarliestBase earliest_base(const LinearHistory& h, int n, const std::vector<TestCase>& tests,
                                  CoverageStore& store) {
  const auto& left = h.at(n - 1);
  const auto& merge = h.at(n);
  auto cmp = store.comparisons().get(*left, *merge);
  LineSet old_side = cmp->patch.deleted();
  LineSet new_side;
  EarliestBase out;
  for (const auto& t : tests) {
    if (equal_executions(store, t, left, merge).equal) continue;
    out.impacted_tests.push_back(t.name);
    auto a = store.get_execution(t, left);
    auto b = store.get_execution(t, merge);
    old_side.insert(a.covered.begin(), a.covered.end());
    new_side.insert(b.covered.begin(), b.covered.end());
  }
  out.blamed = old_side;
  for (const auto& l : new_side) {
    if (auto back = cmp->mapping.backward(l)) out.blamed.insert(*back);
  }
  for (const auto& [_, origin] : blame(h, n - 1, out.blamed, store.comparisons())) {
    out.index = std::max(out.index, origin);
  }
  return out;
}

/// Evaluates both conjuncts of the candidate contract for every test.
inline ContractCheck check_candidate(const MergeQuadruple& q, const std::vector<TestCase>& tests,
                                     CoverageStore& store) {
  ContractCheck out;
  for (const auto& t : tests) {
    out.checked_tests.push_back(t.name);
    bool low = false;
    auto eq = [&](const VersionPtr& a, const VersionPtr& b) {
      auto v = equal_executions(store, t, a, b);
      low = low || v.confidence == analysis::Confidence::low;
      return v;
    };
    auto lm = eq(q.left, q.merge);
    if (!lm.equal) {
      auto bl = eq(q.base, q.left);
      if (!bl.equal) out.violations.push_back({t.name, Clause::preserve_old, lm, bl});
      auto rm = eq(q.right, q.merge);
      if (!rm.equal) out.violations.push_back({t.name, Clause::preserve_new, lm, rm});
    } else {
      auto br = eq(q.base, q.right);
      if (!br.equal) out.violations.push_back({t.name, Clause::no_new_behavior, lm, br});
    }
    if (low) out.low_confidence_tests.push_back(t.name);
  }
  return out;
}

namespace detail {

inline void check_range(const LinearHistory& h, int n) {
  if (n < 2 || n >= h.size()) {
    throw std::out_of_range("commit index " + std::to_string(n) + " outside [2, " + std::to_string(h.size() - 1) +
                            "]");
  }
}

enum class Attempt { candidate, patch_failed, build_failed, contract_violated, untested };

struct AttemptResult {
  Attempt kind = Attempt::patch_failed;
  CandidateBase candidate;
};

/// Runs `work(k)` for k in [0, count) on up to `jobs` threads.
template <typename F>
void parallel_for(int count, int jobs, F&& work) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int k = 0; k < count; ++k) work(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mu;
  for (int j = 0; j < jobs; ++j) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        try {
          work(k);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Common prelude of both algorithms: the skip rules and the suite T.
struct Prelude {
  bool skipped = false;
  SkipReason reason = SkipReason::build_failure;
  std::string detail;
  std::shared_ptr<const Comparison> main;
  std::vector<TestCase> tests;
};

inline Prelude prelude(const LinearHistory& h, int n, CoverageStore& store) {
  detail::check_range(h, n);
  Prelude p;
  auto& backend = store.backend();
  const auto& left = h[n - 1];
  const auto& merge = h[n];
  for (const auto& v : {merge, left}) {
    auto st = backend.build(*v);
    if (!st.ok) {
      p.skipped = true;
      p.detail = v->id + ": " + st.message;
      return p;
    }
  }
  p.main = store.comparisons().get(*left, *merge);
  if (!backend.changes_source(*p.main, *left, *merge)) {
    p.skipped = true;
    p.reason = SkipReason::no_source_change;
    return p;
  }
  p.tests = merge_suites({backend.tests(*left), backend.tests(*merge)});
  return p;
}

inline detail::AttemptResult try_weak_base(const LinearHistory& h, int n, int i, const Prelude& p,
                                           CoverageStore& store) {
  detail::AttemptResult r;
  auto& backend = store.backend();
  const auto& base = h[i];
  auto applied = apply_patch(base->snapshot, p.main->patch);
  if (!applied) {
    r.kind = detail::Attempt::patch_failed;
    return r;
  }
  auto vt = make_synthetic(*base, p.main->patch, std::move(applied).value());
  if (!backend.build(*base).ok || !backend.build(*vt).ok) {
    r.kind = detail::Attempt::build_failed;
    return r;
  }
  auto all = merge_suites({p.tests, backend.tests(*base)});
  if (all.empty()) {
    r.kind = detail::Attempt::untested;
    return r;
  }
  MergeQuadruple q{base, h[n - 1], vt, h[n]};
  auto check = check_candidate(q, all, store);
  if (!check.ok()) {
    r.kind = detail::Attempt::contract_violated;
    return r;
  }
  r.kind = detail::Attempt::candidate;
  r.candidate = {q, Source::weak, i, check.checked_tests, check.low_confidence_tests};
  return r;
}

inline void tally(EccStats& s, detail::Attempt a) {
  switch (a) {
    case detail::Attempt::candidate: break;
    case detail::Attempt::patch_failed: ++s.patch_failed; break;
    case detail::Attempt::build_failed: ++s.build_failed; break;
    case detail::Attempt::contract_violated: ++s.contract_violated; break;
    case detail::Attempt::untested: ++s.untested; break;
  }
}

/// Finds candidate bases for commit `n` among v_e..v_{n-2}.
inline EccResult weak_ecc(const LinearHistory& h, int n, const EccConfig& cfg, CoverageStore& store) {
  if (cfg.budget && *cfg.budget < 1) throw std::invalid_argument("budget must be at least 1");
  EccResult out;
  auto p = prelude(h, n, store);
  if (p.skipped) {
    out.skipped = true;
    out.reason = p.reason;
    out.skip_detail = p.detail;
    return out;
  }
  out.earliest_index = earliest_base(h, n, p.tests, store).index;

  std::vector<int> indices;
  for (int i = out.earliest_index; i <= n - 2; ++i) indices.push_back(i);
  if (cfg.order == Order::latest_first) std::reverse(indices.begin(), indices.end());
  if (cfg.budget && static_cast<int>(indices.size()) > *cfg.budget) indices.resize(static_cast<std::size_t>(*cfg.budget));

  std::vector<detail::AttemptResult> results(indices.size());
  detail::parallel_for(static_cast<int>(indices.size()), cfg.jobs, [&](int k) {
    results[static_cast<std::size_t>(k)] = try_weak_base(h, n, indices[static_cast<std::size_t>(k)], p, store);
  });
  out.stats.attempted = static_cast<int>(indices.size());
  for (auto& r : results) {
    tally(out.stats, r.kind);
    if (r.kind == detail::Attempt::candidate) out.candidates.push_back(std::move(r.candidate));
  }
  return out;
}

/// Extends weak ECC by moving the change block that starts at the earliest
/// weak candidate before earlier commits, one commit at a time. The result
/// lists weak candidates first, then strong ones in discovery order.
inline EccResult strong_ecc(const LinearHistory& h, int n, const EccConfig& cfg, CoverageStore& store) {
  EccResult out = weak_ecc(h, n, cfg, store);
  if (out.skipped || out.candidates.empty()) return out;
  auto& backend = store.backend();
  const auto p = prelude(h, n, store);

  int start = out.candidates.front().base_position;
  for (const auto& c : out.candidates) start = std::min(start, c.base_position);
  VersionPtr vb = h[start];

  auto absorb = [&](int i, const std::string& why) { out.trace.push_back({i, "absorbed: " + why, vb->id}); };
  for (int i = start; i >= 1; --i) {
    const auto& vi = h[i];
    const auto& prev = h[i - 1];
    ++out.stats.attempted;
    const Patch block = store.comparisons().get(*vi, *vb)->patch;
    auto moved = apply_patch(prev->snapshot, block);
    if (!moved) {
      ++out.stats.patch_failed;
      absorb(i, "block does not apply");
      continue;
    }
    auto vb2 = make_synthetic(*prev, block, std::move(moved).value());
    if (!backend.build(*vb2).ok || !backend.build(*prev).ok) {
      ++out.stats.build_failed;
      absorb(i, "reordered base does not build");
      continue;
    }
    auto reorder_tests = merge_suites({backend.tests(*vb), backend.tests(*vi), backend.tests(*prev)});
    if (!check_candidate({prev, vi, vb2, vb}, reorder_tests, store).ok()) {
      ++out.stats.contract_violated;
      absorb(i, "reorder contract violated");
      continue;
    }
    auto p2 = apply_patch(vb2->snapshot, p.main->patch);
    if (!p2) {
      ++out.stats.patch_failed;
      absorb(i, "patch does not apply on reordered base");
      continue;
    }
    auto vp2 = make_synthetic(*vb2, p.main->patch, std::move(p2).value());
    if (!backend.build(*vp2).ok) {
      ++out.stats.build_failed;
      absorb(i, "patched reordered base does not build");
      continue;
    }
    MergeQuadruple q{vb2, h[n - 1], vp2, h[n]};
    auto check = check_candidate(q, merge_suites({p.tests, backend.tests(*vb2)}), store);
    if (!check.ok()) {
      ++out.stats.contract_violated;
      absorb(i, "contract violated");
      continue;
    }
    out.candidates.push_back({q, Source::strong, i - 1, check.checked_tests, check.low_confidence_tests});
    vb = vb2;
    out.trace.push_back({i, "reordered", vb->id});
  }
  return out;
}

}  // namespace ecc::engine
