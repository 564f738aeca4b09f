#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "ecc/engine/ecc.hpp"

namespace ecc::detect {

using analysis::CoverageStore;
using analysis::Outcome;
using analysis::TestCase;
using engine::MergeQuadruple;

enum class Rule { r1, r2_left, r2_right, r3 };

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::r1: return "R1";
    case Rule::r2_left: return "R2-left";
    case Rule::r2_right: return "R2-right";
    case Rule::r3: return "R3";
  }
  return "?";
}

struct Finding {
  std::string test;
  Rule rule = Rule::r1;
  std::array<Outcome, 4> outcomes{};  // base, left, right, merge
  LineSet witnesses;
};

struct ConflictReport {
  std::string quad_id;
  std::vector<Finding> findings;

  bool conflict_free() const { return findings.empty(); }
  std::size_t conflicts() const { return findings.size(); }
};

/// Findings of one test on all four versions.
inline std::vector<Finding> detect_test(const MergeQuadruple& q, const TestCase& t, CoverageStore& store) {
  const std::array<analysis::ExecutionRecord, 4> runs = {
      store.get_execution(t, q.base), store.get_execution(t, q.left), store.get_execution(t, q.right),
      store.get_execution(t, q.merge)};
  std::array<Outcome, 4> outcomes{};
  for (std::size_t k = 0; k < 4; ++k) outcomes[k] = runs[k].outcome;
  auto eq = [&](const VersionPtr& a, const VersionPtr& b) { return equal_executions(store, t, a, b); };
  const auto bl = eq(q.base, q.left);
  const auto br = eq(q.base, q.right);
  const auto lm = eq(q.left, q.merge);
  const auto rm = eq(q.right, q.merge);

  std::vector<Finding> out;
  auto add = [&](Rule r, std::initializer_list<const analysis::EqualityVerdict*> from) {
    Finding f{t.name, r, outcomes, {}};
    for (const auto* v : from) f.witnesses.insert(v->witnesses.begin(), v->witnesses.end());
    out.push_back(std::move(f));
  };
  const Outcome merged = outcomes[3];
  if (outcomes[1] == Outcome::pass && outcomes[2] == Outcome::pass && merged != Outcome::pass &&
      merged != Outcome::unresolvable) {
    add(Rule::r1, {&lm, &rm});
  }
  if (br.equal && !bl.equal && !lm.equal) add(Rule::r2_left, {&bl, &lm});
  if (bl.equal && !br.equal && !rm.equal) add(Rule::r2_right, {&br, &rm});
  if (bl.equal && br.equal && (!lm.equal || !rm.equal)) add(Rule::r3, {&lm, &rm});
  return out;
}

/// Runs every rule for every test; findings are ordered by test name, then rule.
inline ConflictReport detect(const MergeQuadruple& q, const std::vector<TestCase>& suites, CoverageStore& store,
                             int jobs = 1) {
  std::vector<std::vector<Finding>> per(suites.size());
  engine::detail::parallel_for(static_cast<int>(suites.size()), jobs, [&](int k) {
    per[static_cast<std::size_t>(k)] = detect_test(q, suites[static_cast<std::size_t>(k)], store);
  });
  ConflictReport out{q.id(), {}};
  for (auto& fs : per) {
    for (auto& f : fs) out.findings.push_back(std::move(f));
  }
  std::stable_sort(out.findings.begin(), out.findings.end(), [](const Finding& a, const Finding& b) {
    return a.test != b.test ? a.test < b.test : a.rule < b.rule;
  });
  return out;
}

}  // namespace ecc::detect
