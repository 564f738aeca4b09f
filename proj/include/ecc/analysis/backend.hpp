#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "ecc/minilang/interpreter.hpp"
#include "ecc/minilang/parser.hpp"
#include "ecc/repo/patch.hpp"
#include "ecc/repo/snapshot.hpp"

namespace ecc::analysis {

using mini::ExecutionRecord;
using mini::Outcome;
using mini::TestCase;

struct BuildStatus {
  bool ok = false;
  std::string message;
};

/// How versions are built and tests executed. Implementations must be safe to
/// call from several threads at once.
class ExecutionBackend {
 public:
  virtual ~ExecutionBackend() = default;

  virtual BuildStatus build(const Version& v) = 0;

  /// Suite of `v`; empty when `v` does not build.
  virtual std::vector<TestCase> tests(const Version& v) = 0;

  /// One run of `t` on `v`, coverage in `v`'s coordinates. `t` may come from
  /// another version's suite.
  virtual ExecutionRecord execute(const TestCase& t, const Version& v, std::uint64_t seed) = 0;

  /// Runs of `t` on versions with the same non-empty fingerprint are
  /// interchangeable up to `adapt`. Empty means never reuse.
  virtual std::string reuse_fingerprint(const TestCase&, const Version&) { return {}; }

  virtual std::optional<ExecutionRecord> adapt(const ExecutionRecord&, const TestCase&, const Version& /*from*/,
                                               const Version& /*to*/) {
    return std::nullopt;
  }

  /// False when the comparison only touches tests, comments or blank lines.
  virtual bool changes_source(const Comparison& c, const Version& a, const Version& b) = 0;
};

/// Builds and runs mini-lang snapshots in process.
class MiniLangBackend : public ExecutionBackend {
 public:
  struct Entry {
    std::optional<mini::Program> program;
    std::optional<mini::BuildError> error;
    std::vector<TestCase> tests;
    std::map<std::string, std::size_t> by_hash;  // content hash -> first test with it

    const TestCase* locate(const std::string& hash) const {
      auto it = by_hash.find(hash);
      return it == by_hash.end() ? nullptr : &tests[it->second];
    }
  };

  std::shared_ptr<const Entry> entry(const Version& v) {
    {
      std::lock_guard lock(mu_);
      if (auto it = cache_.find(v.id); it != cache_.end()) return it->second;
    }
    auto e = std::make_shared<Entry>();
    auto built = mini::build(v.snapshot);
    if (built) {
      e->program = std::move(built).value();
      auto tests = mini::list_tests(v.snapshot);
      if (tests) {
        e->tests = std::move(tests).value();
      } else {
        e->program.reset();
        e->error = tests.error();
      }
    } else {
      e->error = built.error();
    }
    for (std::size_t i = 0; i < e->tests.size(); ++i) e->by_hash.try_emplace(e->tests[i].content_hash, i);
    std::lock_guard lock(mu_);
    return cache_.try_emplace(v.id, std::move(e)).first->second;
  }

  BuildStatus build(const Version& v) override {
    auto e = entry(v);
    return e->program ? BuildStatus{true, {}} : BuildStatus{false, e->error->str()};
  }

  std::vector<TestCase> tests(const Version& v) override { return entry(v)->tests; }

  ExecutionRecord execute(const TestCase& t, const Version& v, std::uint64_t seed) override {
    auto e = entry(v);
    ExecutionRecord rec;
    if (!e->program) {
      rec.outcome = Outcome::unresolvable;
      rec.detail = "build failed";
    } else if (const TestCase* located = e->locate(t.content_hash)) {
      rec = mini::run_test(*e->program, *located, seed);
    } else {
      // A test foreign to `v`: its own lines do not exist there.
      rec = mini::run_test(*e->program, t, seed);
      for (const auto& in : t.body.instrs) rec.covered.erase(in.at);
    }
    rec.test_hash = t.content_hash;
    rec.version_id = v.id;
    rec.seed = seed;
    return rec;
  }

  std::string reuse_fingerprint(const TestCase& t, const Version& v) override {
    auto e = entry(v);
    if (!e->program) return {};
    const TestCase* located = e->locate(t.content_hash);
    const TestCase& body = located ? *located : t;
    if (body.body.uses_rand) return {};
    auto deps = mini::test_dependencies(*e->program, body);
    if (deps.unresolved) return {};
    std::string key = t.content_hash + (located ? "\tlocated\n" : "\tforeign\n");
    for (const auto& name : deps.functions) {
      const auto& f = e->program->functions.at(name);
      if (f.body.uses_rand) return {};
      key += f.normalized_text;
    }
    return key;
  }

  /// Carries a record across versions whose dependency closure is textually
  /// identical: instructions correspond by (function, index), test lines by index.
  std::optional<ExecutionRecord> adapt(const ExecutionRecord& rec, const TestCase& t, const Version& from,
                                       const Version& to) override {
    auto ef = entry(from);
    auto et = entry(to);
    if (!ef->program || !et->program) return std::nullopt;
    std::map<LineRef, LineRef> moves;
    auto pair_bodies = [&](const mini::Body& a, const mini::Body& b) {
      if (a.instrs.size() != b.instrs.size()) return false;
      for (std::size_t i = 0; i < a.instrs.size(); ++i) moves[a.instrs[i].at] = b.instrs[i].at;
      return true;
    };
    const TestCase* lf = ef->locate(t.content_hash);
    const TestCase* lt = et->locate(t.content_hash);
    if ((lf == nullptr) != (lt == nullptr)) return std::nullopt;
    if (lf && !pair_bodies(lf->body, lt->body)) return std::nullopt;
    auto deps = mini::test_dependencies(*ef->program, lf ? *lf : t);
    for (const auto& name : deps.functions) {
      const mini::Function* g = et->program->find(name);
      if (g == nullptr || !pair_bodies(ef->program->functions.at(name).body, g->body)) return std::nullopt;
    }
    ExecutionRecord out = rec;
    out.version_id = to.id;
    out.covered.clear();
    for (const auto& l : rec.covered) {
      auto it = moves.find(l);
      if (it == moves.end()) return std::nullopt;
      out.covered.insert(it->second);
    }
    return out;
  }

  bool changes_source(const Comparison& c, const Version& a, const Version& b) override {
    auto code = [](const Snapshot& s, const std::string& path) {
      std::vector<std::string> out;
      if (const auto* lines = s.file(path)) {
        for (const auto& l : *lines) {
          auto stripped = text::trim(mini::detail::strip_comment(l));
          if (!stripped.empty()) out.emplace_back(stripped);
        }
      }
      return out;
    };
    for (const auto& fp : c.patch.file_patches) {
      if (text::starts_with(fp.path(), "src/") && code(a.snapshot, fp.path()) != code(b.snapshot, fp.path())) {
        return true;
      }
    }
    return false;
  }

 private:
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<const Entry>> cache_;
};

/// Union of suites, one test per content hash, ordered by name. Names shared
/// by tests with different bodies are qualified as `name#<hash prefix>`.
inline std::vector<TestCase> merge_suites(const std::vector<std::vector<TestCase>>& suites) {
  std::map<std::string, TestCase> by_hash;
  for (const auto& suite : suites) {
    for (const auto& t : suite) by_hash.try_emplace(t.content_hash, t);
  }
  std::map<std::string, int> name_count;
  for (const auto& [_, t] : by_hash) ++name_count[t.name];
  std::vector<TestCase> out;
  for (auto& [hash, t] : by_hash) {
    if (name_count[t.name] > 1) t.name += "#" + hash.substr(0, 8);
    out.push_back(std::move(t));
  }
  std::sort(out.begin(), out.end(), [](const TestCase& a, const TestCase& b) {
    return a.name != b.name ? a.name < b.name : a.content_hash < b.content_hash;
  });
  return out;
}

}  // namespace ecc::analysis
