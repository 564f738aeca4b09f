#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ecc/analysis/backend.hpp"
#include "ecc/core/hash.hpp"
#include "ecc/git/config.hpp"
#include "ecc/git/lcov.hpp"
#include "ecc/git/repository.hpp"

namespace ecc::git {

using analysis::BuildStatus;
using analysis::ExecutionRecord;
using analysis::Outcome;
using analysis::TestCase;

/// A test known only by name; its hash is derived from the name.
inline TestCase external_test(const std::string& name) {
  TestCase t;
  t.name = name;
  t.content_hash = hash_hex("external\t" + name);
  return t;
}

/// Builds and runs versions of a git repository through the configured
/// commands, one worktree per version. Work on one version is serialized;
/// different versions run in parallel.
class ExternalBackend : public analysis::ExecutionBackend {
 public:
  explicit ExternalBackend(ExternalProjectConfig cfg) : cfg_(std::move(cfg)) {
    static std::atomic<int> counter{0};
    work_root_ = std::filesystem::temp_directory_path() /
                 ("ecc-work-" + std::to_string(getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(work_root_);
  }

  ~ExternalBackend() override {
    for (const auto& [_, slot] : slots_) {
      if (!slot->dir.empty()) {
        run_process({"git", "-C", cfg_.repo_path.string(), "worktree", "remove", "--force", slot->dir.string()}, {});
      }
    }
    run_process({"git", "-C", cfg_.repo_path.string(), "worktree", "prune"}, {});
    std::error_code ec;
    std::filesystem::remove_all(work_root_, ec);
  }

  ExternalBackend(const ExternalBackend&) = delete;
  ExternalBackend& operator=(const ExternalBackend&) = delete;

  const ExternalProjectConfig& config() const { return cfg_; }

  /// Worktree of `v`, created on first use. Synthetic versions start from
  /// their origin revision with the source roots replaced by their snapshot.
  std::filesystem::path worktree(const Version& v) {
    auto& s = slot(v);
    std::lock_guard lock(s.mu);
    return materialize(v, s);
  }

  BuildStatus build(const Version& v) override {
    auto& s = slot(v);
    std::lock_guard lock(s.mu);
    return build_locked(v, s);
  }

  std::vector<TestCase> tests(const Version& v) override {
    auto& s = slot(v);
    std::lock_guard lock(s.mu);
    if (!build_locked(v, s).ok) return {};
    if (!s.tests) {
      auto r = run_shell(cfg_.list_tests_cmd, s.dir, timeout());
      std::set<std::string> names;
      if (r.exit_code == 0 && !r.timed_out) {
        for (const auto& l : text::split_lines(r.output)) {
          auto name = text::trim(l);
          if (!name.empty()) names.emplace(name);
        }
      }
      s.tests.emplace();
      for (const auto& n : names) s.tests->push_back(external_test(n));
    }
    return *s.tests;
  }

  ExecutionRecord execute(const TestCase& t, const Version& v, std::uint64_t seed) override {
    ExecutionRecord rec;
    rec.test_hash = t.content_hash;
    rec.version_id = v.id;
    rec.seed = seed;
    const auto suite = tests(v);
    auto& s = slot(v);
    std::lock_guard lock(s.mu);
    if (!build_locked(v, s).ok) {
      rec.outcome = Outcome::unresolvable;
      rec.detail = "build failed";
      return rec;
    }
    const bool listed = std::any_of(suite.begin(), suite.end(), [&](const TestCase& c) { return c.name == t.name; });
    if (!listed) {
      rec.outcome = Outcome::unresolvable;
      rec.detail = "test not listed";
      return rec;
    }
    const auto cov = work_root_ / ("coverage-" + std::to_string(next_file_++) + ".info");
    const std::string cmd =
        expand(cfg_.run_test_cmd, {{"test", t.name}, {"coverage_out", cov.string()}, {"seed", std::to_string(seed)}});
    auto r = run_shell(cmd, s.dir, timeout());
    if (r.timed_out) {
      rec.outcome = Outcome::error;
      rec.detail = "timeout";
    } else {
      rec.outcome = r.exit_code == 0 ? Outcome::pass : Outcome::fail;
      if (r.exit_code != 0) rec.detail = "exit status " + std::to_string(r.exit_code);
    }
    std::error_code ec;
    if (std::filesystem::is_regular_file(cov, ec)) {
      try {
        for (const auto& l : parse_coverage(ecc::detail::read_file(cov))) rec.covered.insert(relative(l, s.dir));
      } catch (const CoverageParseError& e) {
        rec.outcome = Outcome::error;
        rec.detail = e.what();
        rec.covered.clear();
      }
      std::filesystem::remove(cov, ec);
    }
    return rec;
  }

  bool changes_source(const Comparison& c, const Version&, const Version&) override {
    for (const auto& fp : c.patch.file_patches) {
      for (const auto& h : fp.hunks) {
        for (const auto* side : {&h.deleted_lines, &h.added_lines}) {
          for (const auto& l : *side) {
            if (!text::trim(l).empty()) return true;
          }
        }
      }
    }
    return false;
  }

 private:
  struct Slot {
    std::mutex mu;
    std::filesystem::path dir;
    std::optional<BuildStatus> status;
    std::optional<std::vector<TestCase>> tests;
  };

  std::optional<std::chrono::milliseconds> timeout() const {
    return std::chrono::milliseconds(static_cast<long long>(cfg_.timeout_secs) * 1000);
  }

  Slot& slot(const Version& v) {
    std::lock_guard lock(mu_);
    auto& s = slots_[v.id];
    if (!s) s = std::make_unique<Slot>();
    return *s;
  }

  const std::filesystem::path& materialize(const Version& v, Slot& s) {
    if (!s.dir.empty()) return s.dir;
    const auto dir = work_root_ / ("wt-" + hash_hex(v.id, 16));
    const std::string rev = v.origin.empty() ? v.id : v.origin;
    git(cfg_.repo_path, {"worktree", "add", "--detach", "--force", dir.string(), resolve(cfg_.repo_path, rev)});
    if (v.synthetic) {
      const std::string listing = git(dir, {"ls-files", "-z"});
      for (const auto& path : text::split(listing, '\0')) {
        if (!path.empty() && cfg_.in_roots(path) && v.snapshot.file(path) == nullptr) {
          std::filesystem::remove(dir / path);
        }
      }
      for (const auto& [path, lines] : v.snapshot.files()) ecc::detail::write_file(dir / path, text::join_lines(lines));
    }
    s.dir = dir;
    return s.dir;
  }

  BuildStatus build_locked(const Version& v, Slot& s) {
    if (s.status) return *s.status;
    try {
      materialize(v, s);
    } catch (const GitError& e) {
      s.status = BuildStatus{false, e.what()};
      return *s.status;
    }
    auto r = run_shell(cfg_.build_cmd, s.dir, timeout());
    if (r.timed_out) {
      s.status = BuildStatus{false, "build_cmd timed out"};
    } else if (r.exit_code != 0) {
      s.status = BuildStatus{false, "build_cmd exited with status " + std::to_string(r.exit_code)};
    } else {
      s.status = BuildStatus{true, {}};
    }
    return *s.status;
  }

  static LineRef relative(const LineRef& l, const std::filesystem::path& root) {
    std::filesystem::path p(l.path);
    if (p.is_absolute()) {
      auto rel = p.lexically_relative(root);
      if (!rel.empty() && *rel.begin() != "..") return {rel.generic_string(), l.line};
    }
    return {p.lexically_normal().generic_string(), l.line};
  }

  ExternalProjectConfig cfg_;
  std::filesystem::path work_root_;
  std::mutex mu_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;
  std::atomic<int> next_file_{0};
};

/// Builds `rev` and runs one test on it.
inline ExecutionRecord run_external_test(const ExternalProjectConfig& cfg, const std::string& rev,
                                         const std::string& test, std::uint64_t seed = 0) {
  cfg.validate();
  ExternalBackend backend(cfg);
  auto v = make_version(resolve(cfg.repo_path, rev), 0, snapshot_at(cfg, rev).snapshot);
  return backend.execute(external_test(test), *v, seed);
}

}  // namespace ecc::git
