#pragma once

// Small hand-built histories. Each commit is written as edits on top of its
// parent; the comments state what the commit does.

#include <functional>
#include <string>
#include <vector>

#include "ecc/repo/snapshot.hpp"

namespace ecc::testing {

using Edit = std::function<void(Snapshot&)>;

inline Edit put(std::string path, std::vector<std::string> lines) {
  return [path = std::move(path), lines = std::move(lines)](Snapshot& s) { s.set_file(path, lines); };
}

/// Sets one line (1-based) of an existing file.
inline Edit set_line(std::string path, int line, std::string content) {
  return [=](Snapshot& s) {
    auto lines = *s.file(path);
    lines.at(static_cast<std::size_t>(line - 1)) = content;
    s.set_file(path, lines);
  };
}

inline LinearHistory chain(const std::vector<std::vector<Edit>>& commits) {
  std::vector<VersionPtr> versions;
  Snapshot cur;
  for (std::size_t i = 0; i < commits.size(); ++i) {
    for (const auto& e : commits[i]) e(cur);
    versions.push_back(make_version("c" + std::to_string(i), static_cast<int>(i), cur, "dev", "commit " + std::to_string(i)));
  }
  return LinearHistory(versions);
}

/// A function `name(x)` returning x plus `k`, in its own file, and a test.
inline std::vector<Edit> module(const std::string& name, int k) {
  return {put("src/" + name + ".mini", {"fn " + name + "(x)", "  r = x + " + std::to_string(k), "  return r", "end"}),
          put("tests/" + name + ".t", {"test t_" + name, "  y = call " + name + "(1)",
                                       "  assert y == " + std::to_string(1 + k), "end"})};
}

/// Three commits on disjoint files with disjoint tests.
inline LinearHistory disjoint_three() { return chain({module("a", 1), module("b", 2), module("c", 3)}); }

inline LinearHistory disjoint_chain(int commits) {
  std::vector<std::vector<Edit>> cs;
  for (int i = 0; i < commits; ++i) cs.push_back(module("d" + std::to_string(i), i));
  return chain(cs);
}

/// Commit 2 edits a line created by commit 1.
inline LinearHistory edits_parent_line() {
  return chain({module("a", 1), {put("src/b.mini", {"fn b(x)", "  r = x + 2", "  return r", "end"})},
                {set_line("src/b.mini", 2, "  r = x + 5")}});
}

const std::vector<std::string> kMFunc = {"fn m(x)", "  a = x + 0", "  b = a * 1", "  return b", "end"};
const std::vector<std::string> kMTest = {"test t_m", "  y = call m(2)", "  assert y > 0", "end"};

/// c0: m; c1: unrelated; c2: bug in g (called by f); c3: compensating fix in f.
inline LinearHistory bug_between_base_and_parent() {
  return chain({{put("src/f.mini", {"fn f(x)", "  c = call g(x)", "  d = c + 0", "  return d", "end"}),
                 put("src/g.mini", {"fn g(x)", "  r = x * 1", "  return r", "end"}),
                 put("tests/f.t", {"test t_f", "  y = call f(5)", "  assert 1", "end"})},
                module("u", 1),
                {set_line("src/g.mini", 2, "  r = x * 2")},
                {set_line("src/f.mini", 3, "  d = c - x")}});
}

/// c0: k calls p; c1: k stops calling p; c2: changes p.
inline LinearHistory path_moves_away() {
  return chain({{put("src/k.mini", {"fn k(x)", "  v = call p(x)", "  return v", "end"}),
                 put("src/p.mini", {"fn p(x)", "  w = x + 1", "  return w", "end"}),
                 put("tests/k.t", {"test t_k", "  y = call k(1)", "  assert 1", "end"})},
                {put("src/k.mini", {"fn k(x)", "  v = x + 1", "  return v", "end"})},
                {set_line("src/p.mini", 2, "  w = x + 2")}});
}

/// Supplementary-commit chains: a fix, an amendment that cannot move before
/// the fix, unrelated commits, and a final patch touching the fixed function.
struct StrongFixture {
  LinearHistory history;
  int n = 0;
  int amend = 0;  // weak ECC stops at this index
};

/// c0 m; c1 unrelated; c2 fix; c3 amend (context needs the fix); c4 unrelated; c5 patch.
inline StrongFixture amend_needs_fix_context() {
  auto m = kMFunc;
  return {chain({{put("src/m.mini", m), put("tests/m.t", kMTest)},
                 module("x", 1),
                 {set_line("src/m.mini", 2, "  a = x + 1")},
                 {set_line("src/m.mini", 3, "  b = a * 2")},
                 module("y", 2),
                 {put("src/m.mini", {"fn m(x)", "  a = x + 1", "  b = a * 2", "  c = b + 1", "  return c", "end"})}}),
          5, 3};
}

/// Same shape with three unrelated commits below the fix.
inline StrongFixture amend_after_several_unrelated() {
  return {chain({{put("src/m.mini", kMFunc), put("tests/m.t", kMTest)},
                 module("x", 1),
                 module("y", 2),
                 module("z", 3),
                 {set_line("src/m.mini", 2, "  a = x + 1")},
                 {set_line("src/m.mini", 3, "  b = a * 2")},
                 module("w", 4),
                 {put("src/m.mini", {"fn m(x)", "  a = x + 1", "  b = a * 2", "  c = b + 1", "  return c", "end"})}}),
          7, 5};
}

/// The amendment lives in another file and calls a helper the fix introduces,
/// so moving it before the fix does not build.
inline StrongFixture amend_calls_new_helper() {
  return {chain({{put("src/m.mini", {"fn m(x)", "  a = x + 0", "  return a", "end"}),
                  put("src/q.mini", {"fn q(x)", "  s = call m(x)", "  return s", "end"}),
                  put("tests/m.t", {"test t_q", "  y = call q(2)", "  assert y > 0", "end"})},
                 module("x", 1),
                 {put("src/m.mini", {"fn m(x)", "  a = x + 0", "  return a", "end", "fn help(x)", "  h = x + 1",
                                     "  return h", "end"})},
                 {put("src/q.mini", {"fn q(x)", "  s = call help(x)", "  return s", "end"})},
                 module("y", 2),
                 {put("src/q.mini", {"fn q(x)", "  s = call help(x)", "  s = s + 1", "  return s", "end"})}}),
          5, 3};
}

/// c0 two independent helpers with guard tests; c1 changes h; c2 changes k.
/// A test summing both helpers passes on c1 and on c0 + c2's patch but not on c2.
inline LinearHistory injected_interference() {
  return chain({{put("src/h.mini", {"fn h(x)", "  r = x * 1", "  return r", "end"}),
                 put("src/k.mini", {"fn k(x)", "  r = x * 1", "  return r", "end"}),
                 put("tests/h.t", {"test t_h", "  y = call h(1)", "  assert y > 0", "end"}),
                 put("tests/k.t", {"test t_k", "  y = call k(1)", "  assert y > 0", "end"})},
                {set_line("src/h.mini", 2, "  r = x + 1")},
                {set_line("src/k.mini", 2, "  r = x + 1")}});
}

const std::vector<std::string> kInterferenceWitness = {"test witness", "  a = call h(1)", "  b = call k(1)",
                                                       "  s = a + b", "  assert s == 3", "end"};

}  // namespace ecc::testing
