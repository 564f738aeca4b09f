#pragma once

// Seeded synthetic histories with known conflicts.
//
// Commit 0 lays out `files` modules of `functions_per_file` functions, each
// with a guard test. Every later commit is one of:
//   feature   a new function (optionally calling a sibling) plus guard tests
//   fix       a changed constant in an existing function
//   refactor  an existing function's sum split over two lines, or joined back
//   disjoint  a fresh module in fresh files
//   pair      three commits S < A < B: S adds helpers h and k with guards,
//             A changes h, B changes k. A hidden witness summing h(1) and k(1)
//             passes on v_{B-1} and on v_{A-1} + B's patch but fails on v_B.
// Every function returns a positive value and every visible test asserts
// positivity, so all visible tests pass on every version.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecc/core/hash.hpp"
#include "ecc/core/text.hpp"
#include "ecc/minilang/interpreter.hpp"
#include "ecc/minilang/parser.hpp"
#include "ecc/repo/layout.hpp"
#include "ecc/repo/patch.hpp"

namespace ecc::gen {

class GenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Commit-kind probabilities are relative weights: they are normalized over
/// their sum, which must be positive. A pair drawn without room for its three
/// commits is redrawn among the other kinds (feature if all are zero).
struct GenParams {
  int commits = 10;
  int files = 2;
  int functions_per_file = 2;
  double p_feature = 0.3;
  double p_fix = 0.3;
  double p_refactor = 0.1;
  double p_conflict_pair = 0.2;
  double p_disjoint = 0.1;
  int tests_per_commit = 1;
  double flaky_rate = 0.0;  // share of new tests that branch on rand(2)

  void validate() const {
    if (commits < 3) throw GenError("commits must be at least 3");
    if (files < 1) throw GenError("files must be at least 1");
    if (functions_per_file < 1) throw GenError("functions_per_file must be at least 1");
    if (tests_per_commit < 1) throw GenError("tests_per_commit must be at least 1");
    const std::pair<const char*, double> ps[] = {{"p_feature", p_feature},       {"p_fix", p_fix},
                                                 {"p_refactor", p_refactor},     {"p_conflict_pair", p_conflict_pair},
                                                 {"p_disjoint", p_disjoint},     {"flaky_rate", flaky_rate}};
    for (const auto& [name, p] : ps) {
      if (!(p >= 0.0 && p <= 1.0)) throw GenError(std::string(name) + " must be in [0, 1]");
    }
    if (p_feature + p_fix + p_refactor + p_conflict_pair + p_disjoint <= 0.0) {
      throw GenError("at least one commit-kind probability must be positive");
    }
    if (p_conflict_pair > 0.0 && commits < 4) throw GenError("conflict pairs need at least 4 commits");
  }
};

struct ConflictPair {
  int earlier = 0;
  int later = 0;
  std::string witness;  // test name

  auto operator<=>(const ConflictPair&) const = default;
};

struct GroundTruth {
  std::string history_hash;
  std::vector<ConflictPair> pairs;
  std::vector<std::string> probes;  // hidden tests expected to raise no finding
  std::map<int, std::vector<int>> rebaseable;
  std::map<std::string, std::vector<std::string>> hidden_files;  // file name -> lines
};

struct Generated {
  LinearHistory history;
  GroundTruth truth;
};

enum class Kind { scaffold, feature, fix, refactor, disjoint, pair_setup, pair_left, pair_right };

namespace detail {

/// Draws with fixed formulas on top of mt19937_64 so output does not depend
/// on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  int below(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return unit() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& xs) {
    return xs[static_cast<std::size_t>(below(static_cast<int>(xs.size())))];
  }

 private:
  std::mt19937_64 engine_;
};

struct Fn {
  std::string name;
  std::string callee;  // empty: no call
  int c = 1;
  bool split = false;

  std::vector<std::string> render() const {
    std::vector<std::string> out = {"fn " + name + "(x)"};
    out.push_back(callee.empty() ? "  a = x + 0" : "  a = call " + callee + "(x)");
    if (split) {
      out.push_back("  t = a + 0");
      out.push_back("  b = t + " + std::to_string(c));
    } else {
      out.push_back("  b = a + " + std::to_string(c));
    }
    out.push_back("  return b");
    out.push_back("end");
    return out;
  }
};

inline std::vector<std::string> guard(const std::string& test, const std::string& fn, int arg, bool flaky) {
  if (!flaky) {
    return {"test " + test, "  y = call " + fn + "(" + std::to_string(arg) + ")", "  assert y > 0", "end"};
  }
  return {"test " + test,
          "  r = rand(2)",
          "  if r goto alt",
          "  y = call " + fn + "(" + std::to_string(arg) + ")",
          "  goto out",
          "alt: y = call " + fn + "(" + std::to_string(arg + 1) + ")",
          "out: assert y > 0",
          "end"};
}

class Builder {
 public:
  Builder(const GenParams& p, std::uint64_t seed) : p_(p), rng_(seed), seed_(seed) {}

  Generated run() {
    plan();
    scaffold();
    for (int i = 1; i < p_.commits; ++i) step(i);
    Generated g{LinearHistory(versions_), std::move(truth_)};
    g.truth.history_hash = g.history.ids_hash();
    self_check(g);
    return g;
  }

 private:
  struct Pair {
    int number = 0;
    int setup = 0;
    int left = 0;
    int right = 0;
  };

  void plan() {
    kinds_.assign(static_cast<std::size_t>(p_.commits), Kind::scaffold);
    std::vector<bool> taken(static_cast<std::size_t>(p_.commits), false);
    taken[0] = true;
    for (int i = 1; i < p_.commits; ++i) {
      if (taken[static_cast<std::size_t>(i)]) continue;
      Kind k = draw(true);
      if (k == Kind::pair_setup) {
        const int gap = rng_.below(2);
        const int right = i + 2 + gap;
        auto free = [&](int j) { return j < p_.commits && !taken[static_cast<std::size_t>(j)]; };
        if (free(i + 1) && free(right)) {
          Pair pr{static_cast<int>(pairs_.size()) + 1, i, i + 1, right};
          pairs_.push_back(pr);
          kinds_[static_cast<std::size_t>(i + 1)] = Kind::pair_left;
          kinds_[static_cast<std::size_t>(right)] = Kind::pair_right;
          taken[static_cast<std::size_t>(i + 1)] = taken[static_cast<std::size_t>(right)] = true;
        } else {
          k = draw(false);
        }
      }
      kinds_[static_cast<std::size_t>(i)] = k;
      taken[static_cast<std::size_t>(i)] = true;
    }
  }

  Kind draw(bool allow_pair) {
    const std::pair<Kind, double> weights[] = {{Kind::feature, p_.p_feature},
                                               {Kind::fix, p_.p_fix},
                                               {Kind::refactor, p_.p_refactor},
                                               {Kind::pair_setup, allow_pair ? p_.p_conflict_pair : 0.0},
                                               {Kind::disjoint, p_.p_disjoint}};
    double total = 0;
    for (const auto& [_, w] : weights) total += w;
    if (total <= 0) return Kind::feature;
    double u = rng_.unit() * total;
    for (const auto& [k, w] : weights) {
      if (w > 0 && u < w) return k;
      u -= w;
    }
    for (int j = 4; j >= 0; --j) {
      if (weights[j].second > 0) return weights[j].first;
    }
    return Kind::feature;
  }

  void scaffold() {
    for (int f = 0; f < p_.files; ++f) {
      const std::string mod = "f" + std::to_string(f);
      modules_.push_back(mod);
      for (int j = 0; j < p_.functions_per_file; ++j) {
        Fn fn{mod + "_" + std::to_string(j), "", 1 + rng_.below(9), false};
        if (j > 0 && rng_.chance(0.5)) fn.callee = mod + "_" + std::to_string(rng_.below(j));
        scaffold_fns_.push_back(fn.name);
        add_function(mod, fn, 1);
      }
    }
    commit(0, "initial layout");
  }

  void add_function(const std::string& mod, const Fn& fn, int tests) {
    fns_[mod].push_back(fn);
    for (int t = 0; t < tests; ++t) {
      const std::string name = "t_" + fn.name + "_" + std::to_string(test_counter_[fn.name]++);
      tests_[mod].push_back(guard(name, fn.name, 1 + rng_.below(5), rng_.chance(p_.flaky_rate)));
    }
  }

  Fn* random_fn() {
    std::vector<std::pair<std::string, std::size_t>> all;
    for (const auto& [mod, fs] : fns_) {
      for (std::size_t j = 0; j < fs.size(); ++j) all.push_back({mod, j});
    }
    const auto& [mod, j] = rng_.pick(all);
    return &fns_[mod][j];
  }

  void step(int i) {
    const Kind k = kinds_[static_cast<std::size_t>(i)];
    switch (k) {
      case Kind::feature: {
        const std::string& mod = rng_.pick(modules_);
        Fn fn{mod + "_" + std::to_string(fns_[mod].size()), "", 1 + rng_.below(9), false};
        if (rng_.chance(0.5)) fn.callee = rng_.pick(fns_[mod]).name;
        add_function(mod, fn, p_.tests_per_commit);
        commit(i, "add " + fn.name);
        break;
      }
      case Kind::fix: {
        Fn* fn = random_fn();
        fn->c = 1 + (fn->c + rng_.below(8)) % 9;
        commit(i, "adjust " + fn->name);
        break;
      }
      case Kind::refactor: {
        Fn* fn = random_fn();
        fn->split = !fn->split;
        commit(i, "restructure " + fn->name);
        break;
      }
      case Kind::disjoint: {
        const std::string mod = "d" + std::to_string(i);
        add_function(mod, Fn{mod, "", 1 + rng_.below(9), false}, p_.tests_per_commit);
        if (i >= 2) {
          for (int b = 0; b <= i - 2; ++b) truth_.rebaseable[i].push_back(b);
        }
        commit(i, "add module " + mod);
        break;
      }
      case Kind::pair_setup:
      case Kind::pair_left:
      case Kind::pair_right: pair_step(i, k); break;
      case Kind::scaffold: break;
    }
  }

  const Pair& pair_at(int i) const {
    for (const auto& p : pairs_) {
      if (p.setup == i || p.left == i || p.right == i) return p;
    }
    throw GenError("internal: no pair at commit " + std::to_string(i));
  }

  void pair_step(int i, Kind k) {
    const Pair& p = pair_at(i);
    const std::string n = std::to_string(p.number);
    const std::string h = "h" + n;
    const std::string kk = "k" + n;
    auto helper = [](const std::string& name, const std::string& body) {
      return std::vector<std::string>{"fn " + name + "(x)", "  r = " + body, "  return r", "end"};
    };
    if (k == Kind::pair_setup) {
      raw_["src/" + h + ".mini"] = helper(h, "x * 1");
      raw_["src/" + kk + ".mini"] = helper(kk, "x * 1");
      raw_["tests/" + h + ".t"] = guard("t_" + h, h, 1, false);
      raw_["tests/" + kk + ".t"] = guard("t_" + kk, kk, 1, false);
      const std::string w = "w_" + n;
      truth_.hidden_files[w + ".t"] = {"test " + w,    "  a = call " + h + "(1)", "  b = call " + kk + "(1)",
                                       "  s = a + b", "  assert s == 3",        "end"};
      truth_.pairs.push_back({p.left, p.right, w});
      commit(i, "add helpers " + h + " and " + kk);
    } else if (k == Kind::pair_left) {
      raw_["src/" + h + ".mini"] = helper(h, "x + 1");
      commit(i, "change " + h);
    } else {
      raw_["src/" + kk + ".mini"] = helper(kk, "x + 1");
      commit(i, "change " + kk);
    }
  }

  void commit(int i, const std::string& message) {
    if (i == p_.commits - 1) add_probes();
    Snapshot s;
    for (const auto& [mod, fs] : fns_) {
      std::vector<std::string> src;
      for (const auto& fn : fs) {
        auto lines = fn.render();
        src.insert(src.end(), lines.begin(), lines.end());
      }
      s.set_file("src/" + mod + ".mini", src);
      std::vector<std::string> tests;
      for (const auto& t : tests_[mod]) tests.insert(tests.end(), t.begin(), t.end());
      s.set_file("tests/" + mod + ".t", tests);
    }
    for (const auto& [path, lines] : raw_) s.set_file(path, lines);
    std::string parent = versions_.empty() ? to_hex(seed_) : versions_.back()->id;
    std::string id = hash_hex(parent + "\n" + message + "\n" + s.content_hash(), 12);
    versions_.push_back(make_version(id, i, std::move(s), "gen", message));
  }

  /// Hidden tests summing two scaffold functions; they pass everywhere.
  void add_probes() {
    if (!truth_.probes.empty()) return;
    for (int q = 0; q < p_.files; ++q) {
      const std::string a = rng_.pick(scaffold_fns_);
      const std::string b = rng_.pick(scaffold_fns_);
      const std::string name = "probe_" + std::to_string(q + 1);
      truth_.probes.push_back(name);
      truth_.hidden_files[name + ".t"] = {"test " + name,  "  a = call " + a + "(1)", "  b = call " + b + "(2)",
                                          "  s = a + b", "  assert s > 0",         "end"};
    }
  }

  void self_check(const Generated& g) const {
    const auto& h = g.history;
    for (const auto& v : h.versions()) {
      auto program = mini::build(v->snapshot);
      if (!program) throw GenError("internal: " + v->id + " does not build: " + program.error().str());
      const auto tests = mini::list_tests(v->snapshot);
      for (const auto& t : *tests) {
        for (std::uint64_t seed : {0u, 1u}) {
          if (mini::run_test(*program, t, seed).outcome != mini::Outcome::pass) {
            throw GenError("internal: " + t.name + " fails on " + v->id);
          }
        }
      }
    }
    for (const auto& pr : g.truth.pairs) {
      const auto& hidden = g.truth.hidden_files.at(pr.witness + ".t");
      auto w = (*mini::parse_test_file("hidden/" + pr.witness + ".t", hidden))[0];
      const Patch patch = diff(h[pr.later - 1]->snapshot, h[pr.later]->snapshot);
      auto right = apply_patch(h[pr.earlier - 1]->snapshot, patch);
      if (!right) throw GenError("internal: patch of " + std::to_string(pr.later) + " does not apply");
      auto outcome = [&](const Snapshot& s) {
        auto program = mini::build(s);
        if (!program) throw GenError("internal: witness version does not build");
        return mini::run_test(*program, w, 0).outcome;
      };
      if (outcome(h[pr.later - 1]->snapshot) != mini::Outcome::pass || outcome(*right) != mini::Outcome::pass ||
          outcome(h[pr.later]->snapshot) != mini::Outcome::fail) {
        throw GenError("internal: witness " + pr.witness + " does not separate its pair");
      }
    }
  }

  GenParams p_;
  Rng rng_;
  std::uint64_t seed_;
  std::vector<Kind> kinds_;
  std::vector<Pair> pairs_;
  std::vector<std::string> modules_;
  std::vector<std::string> scaffold_fns_;
  std::map<std::string, std::vector<Fn>> fns_;
  std::map<std::string, std::vector<std::vector<std::string>>> tests_;
  std::map<std::string, int> test_counter_;
  std::map<std::string, std::vector<std::string>> raw_;
  std::vector<VersionPtr> versions_;
  GroundTruth truth_;
};

}  // namespace detail

inline Generated generate(const GenParams& params, std::uint64_t seed) {
  params.validate();
  return detail::Builder(params, seed).run();
}

/// Parsed hidden tests (witnesses and probes), ordered by file name.
inline std::vector<mini::TestCase> hidden_tests(const GroundTruth& truth) {
  std::vector<mini::TestCase> out;
  for (const auto& [file, lines] : truth.hidden_files) {
    auto parsed = mini::parse_test_file("hidden/" + file, lines);
    if (!parsed) throw GenError(parsed.error().str());
    out.insert(out.end(), parsed->begin(), parsed->end());
  }
  return out;
}

inline std::string truth_text(const GroundTruth& t) {
  std::string out = "history " + t.history_hash + "\n";
  for (const auto& p : t.pairs) {
    out += "pair " + std::to_string(p.earlier) + " " + std::to_string(p.later) + " " + p.witness + "\n";
  }
  for (const auto& p : t.probes) out += "probe " + p + "\n";
  for (const auto& [n, bases] : t.rebaseable) {
    std::string list;
    for (int b : bases) list += (list.empty() ? "" : ",") + std::to_string(b);
    out += "rebaseable " + std::to_string(n) + " " + list + "\n";
  }
  return out;
}

inline GroundTruth parse_truth(const std::string& content) {
  GroundTruth t;
  int line_no = 0;
  auto to_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v = -1;
    try {
      v = std::stoi(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size() || v < 0) throw GenError("truth line " + std::to_string(line_no) + ": bad index '" + s + "'");
    return v;
  };
  for (const auto& raw : text::split_lines(content)) {
    ++line_no;
    const auto line = std::string(text::trim(raw));
    if (line.empty()) continue;
    std::vector<std::string> f;
    for (auto& part : text::split(line, ' ')) {
      if (!part.empty()) f.push_back(part);
    }
    const std::string where = "truth line " + std::to_string(line_no) + ": ";
    if (f[0] == "history" && f.size() == 2) {
      t.history_hash = f[1];
    } else if (f[0] == "pair" && f.size() == 4) {
      t.pairs.push_back({to_int(f[1]), to_int(f[2]), f[3]});
    } else if (f[0] == "probe" && f.size() == 2) {
      t.probes.push_back(f[1]);
    } else if (f[0] == "rebaseable" && f.size() == 3) {
      auto& bases = t.rebaseable[to_int(f[1])];
      for (const auto& b : text::split(f[2], ',')) bases.push_back(to_int(b));
    } else if (f[0] == "rebaseable" && f.size() == 2) {
      t.rebaseable[to_int(f[1])];
    } else {
      throw GenError(where + "unrecognized claim '" + line + "'");
    }
  }
  if (t.history_hash.empty()) throw GenError("truth file has no history line");
  return t;
}

/// Writes the history layout, `truth.txt` and `hidden/*.t` under `dir`.
inline void write_corpus(const std::filesystem::path& dir, const Generated& g) {
  namespace fs = std::filesystem;
  write_history(dir, g.history);
  ecc::detail::write_file(dir / "truth.txt", truth_text(g.truth));
  fs::remove_all(dir / "hidden");
  for (const auto& [file, lines] : g.truth.hidden_files) ecc::detail::write_file(dir / "hidden" / file, text::join_lines(lines));
}

/// Reads what `write_corpus` wrote.
inline Generated read_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  Generated g{load_history(dir), {}};
  if (!fs::is_regular_file(dir / "truth.txt")) throw GenError("no truth.txt in " + dir.string());
  g.truth = parse_truth(ecc::detail::read_file(dir / "truth.txt"));
  if (fs::is_directory(dir / "hidden")) {
    for (const auto& e : fs::directory_iterator(dir / "hidden")) {
      if (e.is_regular_file() && e.path().extension() == ".t") {
        g.truth.hidden_files[e.path().filename().string()] = text::split_lines(ecc::detail::read_file(e.path()));
      }
    }
  }
  return g;
}

}  // namespace ecc::gen
