#pragma once

#include <set>
#include <string>
#include <vector>

#include "ecc/analysis/coverage_store.hpp"

namespace ecc::analysis {

enum class Confidence { high, low };

inline const char* to_string(Confidence c) { return c == Confidence::high ? "high" : "low"; }

struct EqualityVerdict {
  bool equal = true;
  Confidence confidence = Confidence::high;
  LineSet witnesses;  // covered deleted lines (older side) and covered added lines (newer side)
  bool partial_observation = false;  // some side was unresolvable
};

/// Executions are impacted iff the older run covers a deleted line or the newer
/// run covers an added line of `c`, which compares the older version to the newer.
inline EqualityVerdict judge(const ExecutionRecord& older, const ExecutionRecord& newer, const Comparison& c) {
  EqualityVerdict v;
  for (const auto& l : older.covered) {
    if (c.deletes(l)) v.witnesses.insert(l);
  }
  for (const auto& l : newer.covered) {
    if (c.adds(l)) v.witnesses.insert(l);
  }
  v.equal = v.witnesses.empty();
  if (v.equal && c.mapping.map_forward(older.covered) != newer.covered) v.confidence = Confidence::low;
  v.partial_observation = older.outcome == Outcome::unresolvable || newer.outcome == Outcome::unresolvable;
  return v;
}

inline EqualityVerdict equal_executions(CoverageStore& store, const TestCase& t, const VersionPtr& older,
                                        const VersionPtr& newer) {
  auto a = store.get_execution(t, older);
  auto b = store.get_execution(t, newer);
  return judge(a, b, *store.comparisons().get(*older, *newer));
}

struct TestClassification {
  std::set<std::string> added;
  std::set<std::string> deleted;
  std::set<std::string> changed;
  std::set<std::string> unchanged;
};

/// Splits common test names by whether the body or any function of the
/// transitive dependency closure differs textually.
inline TestClassification classify_tests(const std::vector<TestCase>& prev, const mini::Program& prev_program,
                                         const std::vector<TestCase>& next, const mini::Program& next_program) {
  auto closure_text = [](const mini::Program& p, const TestCase& t) {
    auto deps = mini::test_dependencies(p, t);
    std::string out = t.content_hash + (deps.unresolved ? "\tunresolved\n" : "\n");
    for (const auto& name : deps.functions) out += p.functions.at(name).normalized_text;
    return out;
  };
  std::map<std::string, const TestCase*> before;
  std::map<std::string, const TestCase*> after;
  for (const auto& t : prev) before[t.name] = &t;
  for (const auto& t : next) after[t.name] = &t;

  TestClassification out;
  for (const auto& [name, t] : before) {
    auto it = after.find(name);
    if (it == after.end()) {
      out.deleted.insert(name);
    } else if (closure_text(prev_program, *t) == closure_text(next_program, *it->second)) {
      out.unchanged.insert(name);
    } else {
      out.changed.insert(name);
    }
  }
  for (const auto& [name, _] : after) {
    if (!before.count(name)) out.added.insert(name);
  }
  return out;
}

}  // namespace ecc::analysis
