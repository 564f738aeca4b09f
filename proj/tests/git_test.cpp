#include <gtest/gtest.h>

#include <regex>
#include <thread>

#include "ecc/engine/ecc.hpp"
#include "ecc/git/backend.hpp"
#include "support/temp_dir.hpp"

namespace ecc::git {
namespace {

using testing::TempDir;
using testing::read_text;
using testing::write_text;

std::string coverage_error(std::string_view text) {
  try {
    parse_coverage(text);
  } catch (const CoverageParseError& e) {
    return e.what();
  }
  return "accepted";
}

TEST(Lcov, SingleHit) {
  EXPECT_EQ(parse_coverage("SF:a.c\nDA:3,1\nend_of_record\n"), (LineSet{{"a.c", 3}}));
}

TEST(Lcov, ZeroHitsExcluded) {
  EXPECT_TRUE(parse_coverage("SF:a.c\nDA:3,0\nend_of_record\n").empty());
}

TEST(Lcov, FixtureWithTwoRecords) {
  auto got = parse_coverage(read_text(std::filesystem::path(ECC_SOURCE_DIR) / "tests/fixtures/lcov/two_records.info"));
  EXPECT_EQ(got, (LineSet{{"src/a.c", 1}, {"src/a.c", 5}, {"/abs/lib/b.c", 3}, {"/abs/lib/b.c", 11}}));
}

TEST(Lcov, EmptyInputAndOtherRecordsAreIgnored) {
  EXPECT_TRUE(parse_coverage("").empty());
  EXPECT_TRUE(parse_coverage("TN:x\nLF:0\n").empty());
  EXPECT_EQ(parse_coverage("SF:a.c\r\nDA:1,1\r\nend_of_record\r\nSF:a.c\nDA:2,1\nend_of_record\n"),
            (LineSet{{"a.c", 1}, {"a.c", 2}}));
}

TEST(Lcov, MalformedInput) {
  EXPECT_EQ(coverage_error("TN:\nDA:3,1\n"), "coverage line 2: DA before SF");
  EXPECT_EQ(coverage_error("SF:a\nDA:x,1\nend_of_record\n"), "coverage line 2: malformed DA record 'DA:x,1'");
  EXPECT_EQ(coverage_error("SF:a\nDA:3\nend_of_record\n"), "coverage line 2: malformed DA record 'DA:3'");
  EXPECT_EQ(coverage_error("SF:a\nDA:0,1\nend_of_record\n"), "coverage line 2: malformed DA record 'DA:0,1'");
  EXPECT_EQ(coverage_error("SF:a\nDA:2,-1\nend_of_record\n"), "coverage line 2: malformed DA record 'DA:2,-1'");
  EXPECT_EQ(coverage_error("SF:a\nDA:2,1,x,y\nend_of_record\n"),
            "coverage line 2: malformed DA record 'DA:2,1,x,y'");
  EXPECT_EQ(coverage_error("end_of_record\n"), "coverage line 1: end_of_record without SF");
  EXPECT_EQ(coverage_error("SF:a\nDA:1,1\n"), "coverage line 2: missing end_of_record");
  EXPECT_EQ(coverage_error("SF:a\nSF:b\n"), "coverage line 2: SF inside an open record");
  EXPECT_EQ(coverage_error("SF:\n"), "coverage line 1: empty SF path");
  try {
    parse_coverage("\n\nDA:1,1\n");
    FAIL();
  } catch (const CoverageParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
}

const char* kConfig = R"(# project
repo_path = repo
source_roots = src/, tests
build_cmd = make
list_tests_cmd = ./list
run_test_cmd = ./run {test} > /dev/null --lcov {coverage_out}
timeout_secs = 30
)";

TEST(Config, Parses) {
  auto cfg = parse_config(kConfig, "/base");
  EXPECT_EQ(cfg.repo_path, std::filesystem::path("/base/repo"));
  EXPECT_EQ(cfg.source_roots, (std::vector<std::string>{"src", "tests"}));
  EXPECT_EQ(cfg.build_cmd, "make");
  EXPECT_EQ(cfg.list_tests_cmd, "./list");
  EXPECT_EQ(cfg.timeout_secs, 30);
  EXPECT_TRUE(cfg.in_roots("src/a.c"));
  EXPECT_TRUE(cfg.in_roots("tests"));
  EXPECT_FALSE(cfg.in_roots("srcx/a.c"));
  EXPECT_FALSE(cfg.in_roots("docs/a"));
}

TEST(Config, Errors) {
  auto error = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  const std::string base = "repo_path = r\nbuild_cmd = b\nlist_tests_cmd = l\n";
  EXPECT_EQ(error(base + "run_test_cmd = x {test} {coverage_out}\n"), "accepted");
  EXPECT_EQ(error(base), "missing key 'run_test_cmd'");
  EXPECT_EQ(error("build_cmd = b\n"), "missing key 'repo_path'");
  EXPECT_EQ(error(base + "run_test_cmd = x {test}\n"), "run_test_cmd must contain {coverage_out}");
  EXPECT_EQ(error(base + "run_test_cmd = x {coverage_out}\n"), "run_test_cmd must contain {test}");
  EXPECT_EQ(error(base + "run_test_cmd = {test} {coverage_out}\ntimeout_secs = 0\n"), "timeout_secs must be positive");
  EXPECT_EQ(error(base + "timeout_secs = 5s\n"), "config line 4: timeout_secs is not an integer");
  EXPECT_EQ(error(base + "colour = red\n"), "config line 4: unknown key 'colour'");
  EXPECT_EQ(error(base + "build_cmd = c\n"), "config line 4: duplicate key 'build_cmd'");
  EXPECT_EQ(error("repo_path r\n"), "config line 1: expected 'key = value'");
}

TEST(Config, ExpandQuotes) {
  EXPECT_EQ(expand("run {test} -o {coverage_out} {other}", {{"test", "a b"}, {"coverage_out", "it's"}}),
            "run 'a b' -o 'it'\\''s' {other}");
}

TEST(Process, ExitStatusOutputAndDirectory) {
  TempDir d;
  auto r = run_shell("pwd; echo err >&2; exit 3", d.path());
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_FALSE(r.timed_out);
  EXPECT_NE(r.output.find(std::filesystem::canonical(d.path()).string()), std::string::npos);
  EXPECT_NE(r.output.find("err"), std::string::npos);
}

TEST(Process, TimeoutKillsTheGroup) {
  const auto start = std::chrono::steady_clock::now();
  auto r = run_shell("sleep 5 & sleep 5; echo never", {}, std::chrono::milliseconds(200));
  EXPECT_TRUE(r.timed_out);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
  EXPECT_EQ(r.output.find("never"), std::string::npos);
}

/// A scratch git repository.
class Repo {
 public:
  Repo() { sh("git init -q -b main . && git config user.name dev && git config user.email dev@example.com"); }

  const std::filesystem::path& path() const { return dir_.path(); }

  void write(const std::string& rel, const std::string& content) { write_text(path() / rel, content); }

  std::string commit(const std::string& message) {
    sh("git add -A && git commit -q -m " + shell_quote(message));
    return std::string(text::trim(sh("git rev-parse HEAD")));
  }

  std::string sh(const std::string& cmd) {
    auto r = run_shell(cmd, path());
    EXPECT_EQ(r.exit_code, 0) << cmd << ": " << r.output;
    return r.output;
  }

  ExternalProjectConfig config(const std::string& roots = "") const {
    return parse_config("repo_path = " + path().string() + "\nsource_roots = " + roots +
                        "\nbuild_cmd = sh build.sh\nlist_tests_cmd = cat tests.txt\n"
                        "run_test_cmd = sh run.sh {test} {coverage_out}\ntimeout_secs = 1\n");
  }

 private:
  TempDir dir_;
};

TEST(SnapshotAt, HeadOfOneCommitRepoMatchesTrackedTextFiles) {
  Repo r;
  r.write("src/a.txt", "one\ntwo\n");
  r.write("src/sub/b.txt", "x\n");
  r.write("README", "hello\n");
  r.write("img.bin", std::string("ab\0cd", 5));
  const auto head = r.commit("init");
  r.write("untracked.txt", "nope\n");

  auto s = snapshot_at(r.config(), head);
  Snapshot expected;
  expected.set_file("src/a.txt", {"one", "two"});
  expected.set_file("src/sub/b.txt", {"x"});
  expected.set_file("README", {"hello"});
  EXPECT_EQ(s.snapshot, expected);
  EXPECT_EQ(s.warnings, std::vector<std::string>{"img.bin: binary file skipped"});

  auto rooted = snapshot_at(r.config("src"), "HEAD");
  std::vector<std::string> paths;
  for (const auto& [path, _] : rooted.snapshot.files()) paths.push_back(path);
  EXPECT_EQ(paths, (std::vector<std::string>{"src/a.txt", "src/sub/b.txt"}));
}

TEST(SnapshotAt, UnknownRevisionAndUnreadableRepo) {
  Repo r;
  r.write("a", "1\n");
  r.commit("init");
  try {
    snapshot_at(r.config(), "nope");
    FAIL();
  } catch (const GitError& e) {
    EXPECT_EQ(std::string(e.what()), "unknown revision 'nope'");
  }
  auto cfg = r.config();
  cfg.repo_path = r.path() / "missing";
  EXPECT_THROW(snapshot_at(cfg, "HEAD"), GitError);
}

/// Deleted and added lines from `git diff -U0` output.
std::pair<LineSet, LineSet> git_diff_lines(Repo& r, const std::string& a, const std::string& b) {
  const std::string out = r.sh("git diff -U0 --no-renames " + a + " " + b);
  LineSet del, add;
  std::string from, to;
  int old_line = 0, new_line = 0;
  const std::regex hunk(R"(^@@ -(\d+)(?:,\d+)? \+(\d+)(?:,\d+)? @@)");
  for (const auto& line : text::split_lines(out)) {
    std::smatch m;
    if (text::starts_with(line, "--- ")) {
      from = line.substr(4) == "/dev/null" ? "" : line.substr(6);
    } else if (text::starts_with(line, "+++ ")) {
      to = line.substr(4) == "/dev/null" ? "" : line.substr(6);
    } else if (std::regex_search(line, m, hunk)) {
      old_line = std::stoi(m[1]);
      new_line = std::stoi(m[2]);
    } else if (text::starts_with(line, "-")) {
      del.insert({from, old_line++});
    } else if (text::starts_with(line, "+")) {
      add.insert({to, new_line++});
    }
  }
  return {del, add};
}

TEST(SnapshotAt, DiffMatchesTheRepositoryPatch) {
  Repo r;
  r.write("src/a.txt", "alpha\nbeta\ngamma\ndelta\nepsilon\n");
  r.write("src/b.txt", "keep\ndrop\n");
  const auto c0 = r.commit("c0");
  r.write("src/a.txt", "alpha\nBETA\ngamma\ndelta\nepsilon\nzeta\n");
  r.write("src/c.txt", "new\n");
  const auto c1 = r.commit("c1");
  r.write("src/a.txt", "alpha\ngamma\ndelta\nEPSILON\nzeta\n");
  r.sh("git rm -q src/b.txt");
  const auto c2 = r.commit("c2");

  auto cfg = r.config();
  for (auto [a, b] : {std::pair{c0, c1}, std::pair{c1, c2}}) {
    const Patch p = diff(snapshot_at(cfg, a).snapshot, snapshot_at(cfg, b).snapshot);
    auto [del, add] = git_diff_lines(r, a, b);
    EXPECT_FALSE(del.empty() && add.empty());
    EXPECT_EQ(p.deleted(), del);
    EXPECT_EQ(p.added(), add);
  }
}

TEST(FirstParentHistory, FollowsFirstParents) {
  Repo r;
  r.write("a", "1\n");
  const auto c0 = r.commit("first");
  r.sh("git checkout -q -b side");
  r.write("b", "side\n");
  const auto side = r.commit("side work");
  r.sh("git checkout -q main");
  r.write("a", "2\n");
  const auto c1 = r.commit("second");
  r.sh("git merge -q --no-ff -m merged side");
  const auto m = std::string(text::trim(r.sh("git rev-parse HEAD")));

  auto h = first_parent_history(r.config());
  ASSERT_EQ(h.size(), 3);
  EXPECT_EQ(h[0]->id, c0);
  EXPECT_EQ(h[1]->id, c1);
  EXPECT_EQ(h[2]->id, m);
  EXPECT_EQ(h[1]->message, "second");
  EXPECT_EQ(h[1]->author, "dev");
  EXPECT_EQ(h[1]->origin, c1);
  EXPECT_EQ(*h[2]->snapshot.file("b"), std::vector<std::string>{"side"});
  for (const auto& v : h.versions()) EXPECT_NE(v->id, side);
}

/// A repository whose runner script reports coverage and exit paths per test.
class StubProject : public Repo {
 public:
  StubProject() {
    write("build.sh", "test -f broken && exit 1\nexit 0\n");
    write("tests.txt", "ok\nbad\nslow\nabs\nmarker\n");
    write("src/a.txt", "line one\n");
    write("run.sh",
          "case \"$1\" in\n"
          "  ok) printf 'SF:src/a.txt\\nDA:1,1\\nend_of_record\\n' > \"$2\"; exit 0 ;;\n"
          "  bad) exit 7 ;;\n"
          "  slow) sleep 5; exit 0 ;;\n"
          "  abs) printf 'SF:%s/src/a.txt\\nDA:1,3\\nend_of_record\\n' \"$(pwd)\" > \"$2\"; exit 0 ;;\n"
          "  marker) n=$(cat src/a.txt | wc -c); printf 'SF:src/a.txt\\nDA:%s,1\\nend_of_record\\n' \"$n\" > \"$2\"; exit 0 ;;\n"
          "esac\nexit 2\n");
    head = commit("stub project");
  }
  std::string head;
};

TEST(RunExternalTest, PassWithCoverage) {
  StubProject p;
  auto rec = run_external_test(p.config(), p.head, "ok");
  EXPECT_EQ(rec.outcome, Outcome::pass);
  EXPECT_EQ(rec.covered, (LineSet{{"src/a.txt", 1}}));
  EXPECT_EQ(rec.version_id, p.head);
}

TEST(RunExternalTest, NonZeroExitIsFail) {
  StubProject p;
  auto rec = run_external_test(p.config(), p.head, "bad");
  EXPECT_EQ(rec.outcome, Outcome::fail);
  EXPECT_EQ(rec.detail, "exit status 7");
  EXPECT_TRUE(rec.covered.empty());
}

TEST(RunExternalTest, TimeoutIsError) {
  StubProject p;
  const auto start = std::chrono::steady_clock::now();
  auto rec = run_external_test(p.config(), p.head, "slow");
  EXPECT_EQ(rec.outcome, Outcome::error);
  EXPECT_EQ(rec.detail, "timeout");
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(4));
}

TEST(RunExternalTest, AbsoluteCoveragePathsBecomeRelative) {
  StubProject p;
  EXPECT_EQ(run_external_test(p.config(), p.head, "abs").covered, (LineSet{{"src/a.txt", 1}}));
}

TEST(RunExternalTest, BuildFailureOrUnlistedTestIsUnresolvable) {
  StubProject p;
  EXPECT_EQ(run_external_test(p.config(), p.head, "missing").outcome, Outcome::unresolvable);
  p.write("broken", "");
  const auto broken = p.commit("break the build");
  auto rec = run_external_test(p.config(), broken, "ok");
  EXPECT_EQ(rec.outcome, Outcome::unresolvable);
  EXPECT_EQ(rec.detail, "build failed");
}

TEST(RunExternalTest, InvalidTemplateIsAConfigError) {
  StubProject p;
  auto cfg = p.config();
  cfg.run_test_cmd = "sh run.sh {test}";
  EXPECT_THROW(run_external_test(cfg, p.head, "ok"), ConfigError);
}

TEST(ExternalBackend, WorktreesAreIsolatedPerVersion) {
  StubProject p;
  std::vector<std::string> revs = {p.head};
  for (int k = 2; k <= 4; ++k) {
    p.write("src/a.txt", std::string(static_cast<std::size_t>(k * 10 - 1), 'x') + "\n");
    revs.push_back(p.commit("size " + std::to_string(k)));
  }
  auto cfg = p.config();
  ExternalBackend backend(cfg);
  std::vector<VersionPtr> versions;
  for (std::size_t i = 0; i < revs.size(); ++i) {
    versions.push_back(make_version(revs[i], static_cast<int>(i), snapshot_at(cfg, revs[i]).snapshot));
  }
  std::set<std::filesystem::path> dirs;
  for (const auto& v : versions) dirs.insert(backend.worktree(*v));
  EXPECT_EQ(dirs.size(), versions.size());

  std::vector<ExecutionRecord> recs(versions.size() * 3);
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    pool.emplace_back([&, k] { recs[k] = backend.execute(external_test("marker"), *versions[k % versions.size()], 0); });
  }
  for (auto& t : pool) t.join();
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const int bytes = static_cast<int>(text::join_lines(*versions[k % versions.size()]->snapshot.file("src/a.txt")).size());
    EXPECT_EQ(recs[k].covered, (LineSet{{"src/a.txt", bytes}})) << k;
  }
}

TEST(ExternalBackend, SyntheticVersionsMaterializeTheirSnapshot) {
  StubProject p;
  auto cfg = p.config();
  ExternalBackend backend(cfg);
  auto base = make_version(p.head, 0, snapshot_at(cfg, p.head).snapshot);
  Snapshot s = base->snapshot;
  s.set_file("src/a.txt", {"abcdefghijklmnopq"});
  s.set_file("src/new.txt", {"n"});
  s.set_file("tests.txt", {"marker"});
  auto synth = engine::make_synthetic(*base, diff(base->snapshot, s), s);
  EXPECT_TRUE(backend.build(*synth).ok);
  EXPECT_EQ(backend.tests(*synth).size(), 1u);
  EXPECT_EQ(backend.execute(external_test("marker"), *synth, 0).covered, (LineSet{{"src/a.txt", 18}}));
  EXPECT_EQ(read_text(backend.worktree(*synth) / "src/new.txt"), "n\n");
  EXPECT_EQ(backend.execute(external_test("ok"), *synth, 0).outcome, Outcome::unresolvable);
}

TEST(ExternalBackend, WeakEccOverAGitHistory) {
  // Each commit adds one file; the test named after a file covers all its lines.
  Repo r;
  r.write("build.sh", "exit 0\n");
  r.write("run.sh",
          "f=src/$1.txt\ntest -f \"$f\" || exit 1\n"
          "{ echo SF:$f; i=1; while read -r _; do echo DA:$i,1; i=$((i+1)); done < \"$f\"; echo end_of_record; } > \"$2\"\n");
  r.write("list.sh", "ls src | sed 's/\\.txt$//'\n");
  r.write("src/a.txt", "a1\na2\n");
  r.commit("a");
  r.write("src/b.txt", "b1\n");
  r.commit("b");
  r.write("src/c.txt", "c1\nc2\n");
  r.commit("c");
  auto cfg = r.config();
  cfg.list_tests_cmd = "sh list.sh";
  auto h = first_parent_history(cfg);
  ExternalBackend backend(cfg);
  analysis::CoverageStore store(backend);
  auto res = engine::weak_ecc(h, 2, {}, store);
  ASSERT_FALSE(res.skipped) << res.skip_detail;
  ASSERT_EQ(res.candidates.size(), 1u);
  EXPECT_EQ(res.candidates[0].base_position, 0);
  EXPECT_EQ(res.candidates[0].checked_tests, (std::vector<std::string>{"a", "b", "c"}));
}

}  // namespace
}  // namespace ecc::git
