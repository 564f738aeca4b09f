#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

#include "ecc/detect/detector.hpp"
#include "ecc/gen/generator.hpp"

namespace ecc::gen {

using analysis::CoverageStore;
using analysis::TestCase;

/// Candidate-count buckets: 0, (0,5], (5,10], (10,100], >100.
inline constexpr std::array<const char*, 5> kBucketNames = {"0", "(0,5]", "(5,10]", "(10,100]", ">100"};

inline int bucket_of(int candidates) {
  if (candidates <= 0) return 0;
  if (candidates <= 5) return 1;
  if (candidates <= 10) return 2;
  if (candidates <= 100) return 3;
  return 4;
}

struct Histogram {
  std::array<int, 5> counts{};
  int skipped = 0;

  void add(int candidates) { ++counts[static_cast<std::size_t>(bucket_of(candidates))]; }
  int evaluated() const {
    int n = 0;
    for (int c : counts) n += c;
    return n;
  }
};

/// A rational in [0, 1]; 0/0 reads as 1.
struct Ratio {
  int num = 0;
  int den = 0;

  double value() const { return den == 0 ? 1.0 : static_cast<double>(num) / den; }
};

struct CommitOutcome {
  int commit = 0;
  bool skipped = false;
  int candidates = 0;
  std::set<std::pair<int, int>> detected;  // (earlier, later) commit indices
  int findings = 0;
};

struct EvalOutputs {
  std::string history_hash;
  std::vector<CommitOutcome> commits;
};

struct Metrics {
  Ratio precision;
  Ratio recall;
  Histogram histogram;
  std::set<std::pair<int, int>> detected;
  std::set<std::pair<int, int>> injected;
};

/// Runs weak ECC on every commit n >= 2, then the detector on every candidate
/// with its checked tests plus `hidden`. A commit with findings is attributed
/// to the pair (b + 1, n), b being the latest base position with a finding.
inline EvalOutputs analyze(const LinearHistory& h, const std::vector<TestCase>& hidden, CoverageStore& store,
                           const engine::EccConfig& cfg = {}) {
  EvalOutputs out{h.ids_hash(), {}};
  auto& backend = store.backend();
  for (int n = 2; n < h.size(); ++n) {
    CommitOutcome co;
    co.commit = n;
    auto r = engine::weak_ecc(h, n, cfg, store);
    co.skipped = r.skipped;
    co.candidates = static_cast<int>(r.candidates.size());
    int latest = -1;
    for (const auto& c : r.candidates) {
      std::vector<std::vector<TestCase>> suites = {hidden};
      for (const auto& v : {c.quad.base, c.quad.left, c.quad.merge}) suites.push_back(backend.tests(*v));
      auto report = detect::detect(c.quad, analysis::merge_suites(suites), store, cfg.jobs);
      co.findings += static_cast<int>(report.conflicts());
      if (!report.conflict_free()) latest = std::max(latest, c.base_position);
    }
    if (latest >= 0) co.detected.insert({latest + 1, n});
    out.commits.push_back(std::move(co));
  }
  return out;
}

inline Metrics evaluate(const LinearHistory& h, const GroundTruth& truth, const EvalOutputs& outputs) {
  if (h.ids_hash() != truth.history_hash) {
    throw GenError("history " + h.ids_hash() + " does not match truth " + truth.history_hash);
  }
  if (outputs.history_hash != truth.history_hash) {
    throw GenError("outputs for history " + outputs.history_hash + " do not match truth " + truth.history_hash);
  }
  Metrics m;
  for (const auto& p : truth.pairs) m.injected.insert({p.earlier, p.later});
  for (const auto& c : outputs.commits) {
    if (c.skipped) {
      ++m.histogram.skipped;
    } else {
      m.histogram.add(c.candidates);
    }
    m.detected.insert(c.detected.begin(), c.detected.end());
  }
  int hit = 0;
  for (const auto& d : m.detected) hit += m.injected.count(d) ? 1 : 0;
  m.precision = {hit, static_cast<int>(m.detected.size())};
  m.recall = {hit, static_cast<int>(m.injected.size())};
  return m;
}

}  // namespace ecc::gen
