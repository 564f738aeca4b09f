#include <gtest/gtest.h>

#include "ecc/gen/evaluate.hpp"
#include "support/temp_dir.hpp"

namespace ecc::gen {
namespace {

using analysis::MiniLangBackend;

struct Env {
  MiniLangBackend backend;
  CoverageStore store{backend};
};

GenParams disjoint_only(int commits) {
  GenParams p;
  p.commits = commits;
  p.p_feature = p.p_fix = p.p_refactor = p.p_conflict_pair = 0;
  p.p_disjoint = 1;
  return p;
}

GenParams with_pairs(int commits) {
  GenParams p;
  p.commits = commits;
  p.p_feature = 0.2;
  p.p_fix = 0.2;
  p.p_refactor = 0.1;
  p.p_conflict_pair = 0.4;
  p.p_disjoint = 0.1;
  return p;
}

mini::Outcome run(const Snapshot& s, const mini::TestCase& t) {
  auto program = mini::build(s);
  EXPECT_TRUE(program.ok());
  return mini::run_test(*program, t, 0).outcome;
}

TEST(GenParams, RejectsInvalidValues) {
  auto expect_error = [](GenParams p, const std::string& msg) {
    try {
      p.validate();
      ADD_FAILURE() << "accepted: " << msg;
    } catch (const GenError& e) {
      EXPECT_EQ(std::string(e.what()), msg);
    }
  };
  GenParams p;
  p.commits = 2;
  expect_error(p, "commits must be at least 3");
  p = {};
  p.files = 0;
  expect_error(p, "files must be at least 1");
  p = {};
  p.functions_per_file = 0;
  expect_error(p, "functions_per_file must be at least 1");
  p = {};
  p.tests_per_commit = 0;
  expect_error(p, "tests_per_commit must be at least 1");
  p = {};
  p.p_fix = 1.5;
  expect_error(p, "p_fix must be in [0, 1]");
  p = {};
  p.flaky_rate = -0.1;
  expect_error(p, "flaky_rate must be in [0, 1]");
  p = disjoint_only(5);
  p.p_disjoint = 0;
  expect_error(p, "at least one commit-kind probability must be positive");
  p = {};
  p.commits = 3;
  expect_error(p, "conflict pairs need at least 4 commits");
  p.p_conflict_pair = 0;
  EXPECT_NO_THROW(p.validate());
  EXPECT_THROW(generate(with_pairs(3), 1), GenError);
}

TEST(Generate, DeterministicForFixedSeed) {
  auto p = with_pairs(12);
  p.flaky_rate = 0.3;
  auto a = generate(p, 42);
  auto b = generate(p, 42);
  ASSERT_EQ(a.history.size(), 12);
  ASSERT_EQ(a.history.size(), b.history.size());
  for (int i = 0; i < a.history.size(); ++i) {
    EXPECT_EQ(a.history[i]->id, b.history[i]->id);
    EXPECT_EQ(a.history[i]->snapshot, b.history[i]->snapshot);
    EXPECT_EQ(a.history[i]->message, b.history[i]->message);
  }
  EXPECT_EQ(truth_text(a.truth), truth_text(b.truth));
  EXPECT_EQ(a.truth.hidden_files, b.truth.hidden_files);

  testing::TempDir d1, d2;
  write_corpus(d1.path(), a);
  write_corpus(d2.path(), b);
  for (const auto& e : std::filesystem::recursive_directory_iterator(d1.path())) {
    if (!e.is_regular_file()) continue;
    auto rel = std::filesystem::relative(e.path(), d1.path());
    EXPECT_EQ(testing::read_text(e.path()), testing::read_text(d2.path() / rel)) << rel;
  }

  EXPECT_NE(generate(p, 43).history.ids_hash(), a.history.ids_hash());
}

TEST(Generate, DisjointOnlyTouchesFreshFiles) {
  auto g = generate(disjoint_only(8), 7);
  for (int n = 1; n < g.history.size(); ++n) {
    const Patch patch = diff(g.history[n - 1]->snapshot, g.history[n]->snapshot);
    ASSERT_FALSE(patch.file_patches.empty());
    for (const auto& fp : patch.file_patches) EXPECT_EQ(fp.change(), FileChange::create) << fp.path();
  }
  for (int n = 2; n < g.history.size(); ++n) {
    std::vector<int> all;
    for (int b = 0; b <= n - 2; ++b) all.push_back(b);
    EXPECT_EQ(g.truth.rebaseable.at(n), all);
  }
  EXPECT_FALSE(g.truth.rebaseable.count(1));
  EXPECT_TRUE(g.truth.pairs.empty());
}

TEST(Generate, EveryVersionBuildsAndPassesItsTests) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    auto p = with_pairs(14);
    p.flaky_rate = 0.5;
    p.tests_per_commit = 2;
    auto g = generate(p, seed);
    for (const auto& v : g.history.versions()) {
      auto tests = mini::list_tests(v->snapshot);
      ASSERT_TRUE(tests.ok());
      for (const auto& t : *tests) EXPECT_EQ(run(v->snapshot, t), mini::Outcome::pass) << t.name << " @" << v->id;
    }
  }
}

TEST(Generate, WitnessesSeparateTheirPairs) {
  int pairs = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = generate(with_pairs(12), seed);
    const auto hidden = hidden_tests(g.truth);
    for (const auto& pr : g.truth.pairs) {
      ++pairs;
      ASSERT_LT(pr.earlier, pr.later);
      const auto& h = g.history;
      auto w = std::find_if(hidden.begin(), hidden.end(), [&](const auto& t) { return t.name == pr.witness; });
      ASSERT_NE(w, hidden.end());
      auto right = apply_patch(h[pr.earlier - 1]->snapshot, diff(h[pr.later - 1]->snapshot, h[pr.later]->snapshot));
      ASSERT_TRUE(right.ok());
      EXPECT_EQ(run(h[pr.later - 1]->snapshot, *w), mini::Outcome::pass);
      EXPECT_EQ(run(*right, *w), mini::Outcome::pass);
      EXPECT_EQ(run(h[pr.later]->snapshot, *w), mini::Outcome::fail);
      // Hidden from every version's own suite.
      for (const auto& v : h.versions()) {
        const auto tests = mini::list_tests(v->snapshot);
        for (const auto& t : *tests) EXPECT_NE(t.name, pr.witness);
      }
    }
  }
  EXPECT_GT(pairs, 5);
}

TEST(Generate, ProbesPassEverywhere) {
  auto g = generate(with_pairs(10), 3);
  ASSERT_EQ(g.truth.probes.size(), 2u);
  for (const auto& t : hidden_tests(g.truth)) {
    if (t.name.rfind("probe_", 0) != 0) continue;
    for (const auto& v : g.history.versions()) EXPECT_EQ(run(v->snapshot, t), mini::Outcome::pass);
  }
}

TEST(Truth, TextRoundTrip) {
  auto g = generate(with_pairs(12), 5);
  auto again = parse_truth(truth_text(g.truth));
  EXPECT_EQ(truth_text(again), truth_text(g.truth));
  EXPECT_EQ(again.pairs, g.truth.pairs);
  EXPECT_EQ(again.rebaseable, g.truth.rebaseable);

  testing::TempDir dir;
  write_corpus(dir.path(), g);
  auto back = read_corpus(dir.path());
  EXPECT_EQ(back.history.ids_hash(), g.history.ids_hash());
  EXPECT_EQ(truth_text(back.truth), truth_text(g.truth));
  EXPECT_EQ(back.truth.hidden_files, g.truth.hidden_files);
}

TEST(Truth, Format) {
  GroundTruth t;
  t.history_hash = "abc";
  t.pairs = {{2, 4, "w_1"}};
  t.probes = {"probe_1"};
  t.rebaseable = {{3, {0, 1}}};
  EXPECT_EQ(truth_text(t), "history abc\npair 2 4 w_1\nprobe probe_1\nrebaseable 3 0,1\n");
}

TEST(Truth, MalformedLines) {
  auto error = [](const std::string& text) {
    try {
      parse_truth(text);
    } catch (const GenError& e) {
      return std::string(e.what());
    }
    return std::string("accepted");
  };
  EXPECT_EQ(error("pair 1 2 w\n"), "truth file has no history line");
  EXPECT_EQ(error("history h\npair 1 x w\n"), "truth line 2: bad index 'x'");
  EXPECT_EQ(error("history h\nrebaseable 3 0,-1\n"), "truth line 2: bad index '-1'");
  EXPECT_EQ(error("history h\n\nbogus 1\n"), "truth line 3: unrecognized claim 'bogus 1'");
}

TEST(Metrics, Buckets) {
  const std::pair<int, int> cases[] = {{0, 0}, {1, 1}, {5, 1}, {6, 2}, {10, 2}, {11, 3}, {100, 3}, {101, 4}};
  for (auto [count, bucket] : cases) EXPECT_EQ(bucket_of(count), bucket) << count;
  EXPECT_STREQ(kBucketNames[3], "(10,100]");
}

GroundTruth truth_for(const LinearHistory& h, std::vector<ConflictPair> pairs) {
  GroundTruth t;
  t.history_hash = h.ids_hash();
  t.pairs = std::move(pairs);
  return t;
}

TEST(Metrics, ZeroOverZeroIsOne) {
  auto g = generate(disjoint_only(4), 1);
  EvalOutputs out{g.history.ids_hash(), {{2, false, 0, {}, 0}, {3, true, 0, {}, 0}}};
  auto m = evaluate(g.history, truth_for(g.history, {}), out);
  EXPECT_EQ(m.precision.value(), 1.0);
  EXPECT_EQ(m.recall.value(), 1.0);
  EXPECT_EQ(m.histogram.evaluated(), 1);
  EXPECT_EQ(m.histogram.skipped, 1);
}

TEST(Metrics, PrecisionAndRecall) {
  auto g = generate(disjoint_only(6), 1);
  auto t = truth_for(g.history, {{2, 4, "w_1"}, {3, 5, "w_2"}});
  EvalOutputs out{g.history.ids_hash(), {{4, false, 3, {{2, 4}}, 1}, {5, false, 7, {{1, 5}}, 1}}};
  auto m = evaluate(g.history, t, out);
  EXPECT_EQ(m.precision.num, 1);
  EXPECT_EQ(m.precision.den, 2);
  EXPECT_EQ(m.recall.num, 1);
  EXPECT_EQ(m.recall.den, 2);
  EXPECT_EQ(m.histogram.counts, (std::array<int, 5>{0, 1, 1, 0, 0}));

  out.commits[1].detected = {{3, 5}};
  m = evaluate(g.history, t, out);
  EXPECT_EQ(m.precision.value(), 1.0);
  EXPECT_EQ(m.recall.value(), 1.0);
}

TEST(Metrics, MismatchedHistoryIsAnError) {
  auto g = generate(disjoint_only(4), 1);
  auto other = generate(disjoint_only(4), 2);
  EXPECT_THROW(evaluate(g.history, truth_for(other.history, {}), EvalOutputs{g.history.ids_hash(), {}}), GenError);
  EXPECT_THROW(evaluate(g.history, truth_for(g.history, {}), EvalOutputs{other.history.ids_hash(), {}}), GenError);
}

TEST(Analyze, DisjointCommitsMatchRebaseableClaims) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto p = with_pairs(10);
    p.p_disjoint = 0.4;
    auto g = generate(p, seed);
    Env env;
    for (const auto& [n, bases] : g.truth.rebaseable) {
      auto r = engine::weak_ecc(g.history, n, {}, env.store);
      std::vector<int> got;
      for (const auto& c : r.candidates) got.push_back(c.base_position);
      EXPECT_EQ(got, bases) << "seed " << seed << " commit " << n;
    }
  }
}

TEST(Analyze, FindsEveryInjectedPairAndNothingElse) {
  int pairs = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto g = generate(with_pairs(10), seed);
    Env env;
    auto out = analyze(g.history, hidden_tests(g.truth), env.store);
    auto m = evaluate(g.history, g.truth, out);
    pairs += static_cast<int>(m.injected.size());
    EXPECT_EQ(m.detected, m.injected) << "seed " << seed;
    EXPECT_EQ(m.histogram.evaluated() + m.histogram.skipped, g.history.size() - 2);
  }
  EXPECT_GT(pairs, 0);
}

TEST(Analyze, ControlsRaiseNoFindings) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    auto p = with_pairs(10);
    p.p_conflict_pair = 0;
    p.flaky_rate = 0.3;
    auto g = generate(p, seed);
    Env env;
    auto out = analyze(g.history, hidden_tests(g.truth), env.store);
    for (const auto& c : out.commits) EXPECT_EQ(c.findings, 0) << "seed " << seed << " commit " << c.commit;
  }
}

}  // namespace
}  // namespace ecc::gen
