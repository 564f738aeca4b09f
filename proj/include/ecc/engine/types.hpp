#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ecc/analysis/equality.hpp"
#include "ecc/repo/patch.hpp"
#include "ecc/repo/snapshot.hpp"

namespace ecc::engine {

using analysis::EqualityVerdict;
using analysis::TestCase;

/// (base, left parent, right parent, merge result).
struct MergeQuadruple {
  VersionPtr base;
  VersionPtr left;
  VersionPtr right;
  VersionPtr merge;

  std::string id() const { return base->id + " " + left->id + " " + right->id + " " + merge->id; }
};

/// Version made by the engine: `patch` applied on `base`.
inline VersionPtr make_synthetic(const Version& base, const Patch& patch, Snapshot content) {
  auto v = std::make_shared<Version>();
  v->id = "synth:" + base.id + "+" + patch_hash(patch);
  v->index = -1;
  v->snapshot = std::move(content);
  v->synthetic = true;
  v->origin = base.origin;
  return v;
}

enum class Source { weak, strong };

inline const char* to_string(Source s) { return s == Source::weak ? "weak" : "strong"; }

struct CandidateBase {
  MergeQuadruple quad;
  Source source = Source::weak;
  int base_position = 0;  // history index of the base, or of the commit a synthetic base sits on
  std::vector<std::string> checked_tests;
  std::vector<std::string> low_confidence_tests;
};

enum class Order { earliest_first, latest_first };

struct EccConfig {
  std::optional<int> budget;  // max candidate checks
  Order order = Order::earliest_first;
  int jobs = 1;
};

enum class SkipReason { build_failure, no_source_change };

inline const char* to_string(SkipReason r) {
  return r == SkipReason::build_failure ? "build-failure" : "no-source-change";
}

struct EccStats {
  int attempted = 0;
  int patch_failed = 0;
  int build_failed = 0;
  int contract_violated = 0;
  int untested = 0;  // contract held vacuously: no test to check
};

enum class Clause { preserve_old, preserve_new, no_new_behavior };

inline const char* to_string(Clause c) {
  switch (c) {
    case Clause::preserve_old: return "preserve-old";
    case Clause::preserve_new: return "preserve-new";
    case Clause::no_new_behavior: return "no-new-behavior";
  }
  return "?";
}

struct ContractViolation {
  std::string test;
  Clause clause = Clause::preserve_old;
  EqualityVerdict left_merge;  // t(v_{n-1}) vs t(v_n)
  EqualityVerdict failed;      // the equality the clause required
};

struct ContractCheck {
  std::vector<ContractViolation> violations;
  std::vector<std::string> checked_tests;
  std::vector<std::string> low_confidence_tests;

  bool ok() const { return violations.empty(); }
};

/// What happened at one step of the reordering walk.
struct StrongStep {
  int index = 0;  // i: the step tries to move the pending block before v_i
  std::string action;  // "reordered" or "absorbed: <reason>"
  std::string base_id;
};

struct EccResult {
  bool skipped = false;
  SkipReason reason = SkipReason::build_failure;
  std::string skip_detail;
  std::vector<CandidateBase> candidates;
  EccStats stats;
  int earliest_index = 0;
  std::vector<StrongStep> trace;  // strong only
};

}  // namespace ecc::engine
