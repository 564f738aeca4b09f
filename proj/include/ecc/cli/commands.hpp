#pragma once

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ecc/detect/detector.hpp"
#include "ecc/engine/ecc.hpp"
#include "ecc/gen/evaluate.hpp"
#include "ecc/gen/generator.hpp"
#include "ecc/git/backend.hpp"
#include "ecc/repo/layout.hpp"
#include "ecc/report/report.hpp"

namespace ecc::cli {

using report::json;

enum ExitCode { kOk = 0, kError = 1, kConflicts = 2 };

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string repo;
  bool git = false;
  int jobs = 1;
  bool no_timings = false;
  std::string out;
  int reruns = 0;
  std::string cache;
};

struct EccOptions {
  int commit = -1;
  std::optional<int> budget;
  std::string order = "earliest";
  bool strong = false;
};

struct DetectOptions {
  int commit = -1;
  std::optional<int> base;
  std::string synthetic;
  std::string extra_tests;
};

/// History, backend and coverage store of one invocation.
struct Session {
  std::unique_ptr<analysis::ExecutionBackend> backend;
  LinearHistory history;
  std::unique_ptr<analysis::CoverageStore> store;
  std::string cache;
  bool git = false;

  static Session open(const CommonOptions& o) {
    Session s;
    s.git = o.git;
    if (o.git) {
      auto cfg = git::load_config(o.repo);
      s.history = git::first_parent_history(cfg);
      s.backend = std::make_unique<git::ExternalBackend>(cfg);
    } else {
      s.history = load_history(o.repo);
      s.backend = std::make_unique<analysis::MiniLangBackend>();
    }
    analysis::RerunPolicy policy;
    policy.reruns = o.reruns;
    policy.reuse_by_dependency = !o.git;
    s.store = std::make_unique<analysis::CoverageStore>(*s.backend, policy);
    s.cache = o.cache;
    if (!s.cache.empty() && std::filesystem::exists(s.cache)) {
      std::ifstream in(s.cache, std::ios::binary);
      s.store->load(in);
    }
    return s;
  }

  void save_cache() const {
    if (cache.empty()) return;
    std::ofstream out(cache, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write cache " + cache);
    store->save(out);
  }

  /// Hidden tests from `dir`: mini-lang `*.t` files, or for git projects
  /// files listing one test name per line.
  std::vector<analysis::TestCase> extra_tests(const std::string& dir) const {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw UsageError("extra tests directory " + dir + " does not exist");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<analysis::TestCase> out;
    for (const auto& f : files) {
      const auto lines = text::split_lines(ecc::detail::read_file(f));
      if (git) {
        for (const auto& l : lines) {
          if (!text::trim(l).empty()) out.push_back(git::external_test(std::string(text::trim(l))));
        }
      } else if (f.extension() == ".t") {
        auto parsed = mini::parse_test_file("extra/" + f.filename().string(), lines);
        if (!parsed) throw UsageError(parsed.error().str());
        out.insert(out.end(), parsed->begin(), parsed->end());
      }
    }
    return out;
  }
};

inline std::string short_id(const std::string& id) { return id.size() > 12 ? id.substr(0, 12) : id; }

inline engine::EccConfig ecc_config(const CommonOptions& c, const EccOptions& e) {
  engine::EccConfig cfg;
  cfg.budget = e.budget;
  cfg.jobs = c.jobs;
  cfg.order = e.order == "latest" ? engine::Order::latest_first : engine::Order::earliest_first;
  return cfg;
}

inline json config_echo(const CommonOptions& c, const EccOptions& e) {
  json j = {{"jobs", c.jobs}, {"reruns", c.reruns}, {"order", e.order}, {"strong", e.strong}, {"git", c.git}};
  j["budget"] = e.budget ? json(*e.budget) : json(nullptr);
  return j;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int scan(const CommonOptions& c, const EccOptions& e) {
    auto s = Session::open(c);
    const auto cfg = ecc_config(c, e);
    gen::Histogram hist;
    json commits = json::array();
    out_ << "commit  id            v_e  weak  strong  bucket\n";
    for (int n = 2; n < s.history.size(); ++n) {
      auto r = e.strong ? engine::strong_ecc(s.history, n, cfg, *s.store) : engine::weak_ecc(s.history, n, cfg, *s.store);
      json row = {{"commit", n}, {"id", s.history[n]->id}, {"skipped", r.skipped}};
      out_ << std::setw(6) << n << "  " << std::left << std::setw(12) << short_id(s.history[n]->id) << std::right;
      if (r.skipped) {
        ++hist.skipped;
        row["skip_reason"] = engine::to_string(r.reason);
        out_ << "  skipped: " << engine::to_string(r.reason) << "\n";
      } else {
        int weak = 0;
        int strong = 0;
        for (const auto& cand : r.candidates) (cand.source == engine::Source::weak ? weak : strong)++;
        const int total = weak + strong;
        hist.add(total);
        row["earliest_index"] = r.earliest_index;
        row["weak"] = weak;
        row["strong"] = strong;
        row["candidates"] = total;
        out_ << "  " << std::setw(3) << r.earliest_index << "  " << std::setw(4) << weak << "  " << std::setw(6)
             << (e.strong ? std::to_string(strong) : std::string("-")) << "  " << gen::kBucketNames[gen::bucket_of(total)]
             << "\n";
      }
      commits.push_back(row);
    }
    out_ << "\n";
    print_histogram(hist);
    s.save_cache();
    return finish(c, "scan", {{"repo", c.repo}, {"config", config_echo(c, e)}},
                  {{"commits", commits}, {"histogram", report::to_json(hist)}});
  }

  int ecc(const CommonOptions& c, const EccOptions& e, const std::string& command) {
    auto s = Session::open(c);
    const auto cfg = ecc_config(c, e);
    auto r = e.strong ? engine::strong_ecc(s.history, e.commit, cfg, *s.store)
                      : engine::weak_ecc(s.history, e.commit, cfg, *s.store);
    out_ << command << " ECC for commit " << e.commit << " (" << short_id(s.history[e.commit]->id) << ")\n";
    if (r.skipped) {
      out_ << "skipped: " << engine::to_string(r.reason);
      if (!r.skip_detail.empty()) out_ << " (" << r.skip_detail << ")";
      out_ << "\n";
    } else {
      out_ << "earliest base: " << r.earliest_index << "\n";
      out_ << "candidates: " << r.candidates.size() << "\n";
      for (const auto& cand : r.candidates) {
        out_ << "  " << std::setw(4) << cand.base_position << "  " << std::left << std::setw(6)
             << engine::to_string(cand.source) << std::right << "  " << cand.quad.base->id << "  tests "
             << cand.checked_tests.size();
        if (!cand.low_confidence_tests.empty()) out_ << "  low-confidence " << cand.low_confidence_tests.size();
        out_ << "\n";
      }
      for (const auto& step : r.trace) out_ << "  step " << step.index << ": " << step.action << "\n";
    }
    const auto& st = r.stats;
    out_ << "attempted " << st.attempted << ", patch failed " << st.patch_failed << ", build failed "
         << st.build_failed << ", contract violated " << st.contract_violated << ", untested " << st.untested << "\n";
    s.save_cache();
    return finish(c, command, {{"repo", c.repo}, {"commit", e.commit}, {"config", config_echo(c, e)}},
                  report::to_json(r));
  }

  int detect(const CommonOptions& c, const DetectOptions& d) {
    auto s = Session::open(c);
    const auto& h = s.history;
    if (d.commit < 2 || d.commit >= h.size()) {
      throw UsageError("commit index " + std::to_string(d.commit) + " outside [2, " + std::to_string(h.size() - 1) +
                       "]");
    }
    engine::MergeQuadruple quad;
    if (!d.synthetic.empty()) {
      auto r = engine::strong_ecc(h, d.commit, {}, *s.store);
      const engine::CandidateBase* found = nullptr;
      for (const auto& cand : r.candidates) {
        if (cand.quad.base->id == d.synthetic) found = &cand;
      }
      if (found == nullptr) throw UsageError("no candidate with base " + d.synthetic);
      quad = found->quad;
    } else if (d.base) {
      if (*d.base < 0 || *d.base > d.commit - 2) {
        throw UsageError("base index " + std::to_string(*d.base) + " outside [0, " + std::to_string(d.commit - 2) + "]");
      }
      const Patch p = s.store->comparisons().get(*h[d.commit - 1], *h[d.commit])->patch;
      auto right = apply_patch(h[*d.base]->snapshot, p);
      if (!right) throw UsageError("patch does not apply on base " + std::to_string(*d.base));
      quad = {h[*d.base], h[d.commit - 1], engine::make_synthetic(*h[*d.base], p, std::move(right).value()),
              h[d.commit]};
    } else {
      auto r = engine::weak_ecc(h, d.commit, {}, *s.store);
      if (r.skipped) throw UsageError(std::string("commit skipped: ") + engine::to_string(r.reason));
      if (r.candidates.empty()) throw UsageError("no candidate base for commit " + std::to_string(d.commit));
      quad = r.candidates.front().quad;
      for (const auto& cand : r.candidates) {
        if (cand.base_position < quad.base->index) quad = cand.quad;
      }
    }
    std::vector<std::vector<analysis::TestCase>> suites;
    for (const auto& v : {quad.merge, quad.left, quad.base}) suites.push_back(s.backend->tests(*v));
    if (!d.extra_tests.empty()) suites.push_back(s.extra_tests(d.extra_tests));
    auto rep = detect::detect(quad, analysis::merge_suites(suites), *s.store, c.jobs);

    out_ << "quadruple: " << rep.quad_id << "\n";
    for (const auto& f : rep.findings) {
      out_ << "  " << f.test << "  " << detect::to_string(f.rule) << "  ";
      for (std::size_t k = 0; k < 4; ++k) out_ << (k ? "," : "") << mini::to_string(f.outcomes[k]);
      if (!f.witnesses.empty()) out_ << "  " << to_string(f.witnesses);
      out_ << "\n";
    }
    out_ << "verdict: " << (rep.conflict_free() ? "conflict-free" : "conflicts (" + std::to_string(rep.conflicts()) + ")")
         << "\n";
    s.save_cache();
    json inputs = {{"repo", c.repo}, {"commit", d.commit}, {"extra_tests", d.extra_tests}};
    inputs["base"] = d.base ? json(*d.base) : json(nullptr);
    inputs["synthetic"] = d.synthetic;
    const int code = finish(c, "detect", inputs, report::to_json(rep));
    return code != kOk ? code : rep.conflict_free() ? kOk : kConflicts;
  }

  int generate(const CommonOptions& c, const gen::GenParams& p, std::uint64_t seed, const std::string& dir) {
    auto g = gen::generate(p, seed);
    gen::write_corpus(dir, g);
    out_ << "wrote " << g.history.size() << " commits to " << dir << "\n";
    out_ << "history " << g.truth.history_hash << "\n";
    out_ << "conflict pairs " << g.truth.pairs.size() << ", rebaseable claims " << g.truth.rebaseable.size() << "\n";
    json params = {{"commits", p.commits},
                   {"files", p.files},
                   {"functions_per_file", p.functions_per_file},
                   {"p_feature", p.p_feature},
                   {"p_fix", p.p_fix},
                   {"p_refactor", p.p_refactor},
                   {"p_conflict_pair", p.p_conflict_pair},
                   {"p_disjoint", p.p_disjoint},
                   {"tests_per_commit", p.tests_per_commit},
                   {"flaky_rate", p.flaky_rate}};
    json pairs = json::array();
    for (const auto& pr : g.truth.pairs) pairs.push_back({{"earlier", pr.earlier}, {"later", pr.later}, {"witness", pr.witness}});
    return finish(c, "gen", {{"seed", seed}, {"output_dir", dir}, {"params", params}},
                  {{"history_hash", g.truth.history_hash}, {"commits", g.history.size()}, {"pairs", pairs}});
  }

  int evaluate(const CommonOptions& c, const std::string& dir) {
    auto g = gen::read_corpus(dir);
    analysis::MiniLangBackend backend;
    analysis::RerunPolicy policy;
    policy.reruns = c.reruns;
    analysis::CoverageStore store(backend, policy);
    engine::EccConfig cfg;
    cfg.jobs = c.jobs;
    auto outputs = gen::analyze(g.history, gen::hidden_tests(g.truth), store, cfg);
    auto m = gen::evaluate(g.history, g.truth, outputs);
    auto ratio = [](const gen::Ratio& r) {
      std::ostringstream os;
      os << r.num << "/" << r.den << " (" << std::fixed << std::setprecision(3) << r.value() << ")";
      return os.str();
    };
    out_ << "precision " << ratio(m.precision) << "\n";
    out_ << "recall    " << ratio(m.recall) << "\n\n";
    print_histogram(m.histogram);
    return finish(c, "eval", {{"corpus", dir}, {"reruns", c.reruns}}, report::to_json(m));
  }

 private:
  void print_histogram(const gen::Histogram& h) {
    out_ << "candidates  commits\n";
    for (std::size_t b = 0; b < gen::kBucketNames.size(); ++b) {
      out_ << std::left << std::setw(10) << gen::kBucketNames[b] << std::right << "  " << std::setw(7) << h.counts[b]
           << "\n";
    }
    out_ << std::left << std::setw(10) << "skipped" << std::right << "  " << std::setw(7) << h.skipped << "\n";
  }

  int finish(const CommonOptions& c, const std::string& command, json inputs, json result) {
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start_).count();
    if (!c.no_timings) out_ << "elapsed " << elapsed << " ms\n";
    if (c.out.empty()) return kOk;
    json doc = {{"schema_version", report::kSchemaVersion},
                {"command", command},
                {"inputs", std::move(inputs)},
                {"result", std::move(result)}};
    if (!c.no_timings) doc["timings"] = {{"elapsed_ms", elapsed}};
    std::ofstream f(c.out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write report " + c.out);
    f << report::dump(doc);
    return kOk;
  }

  std::ostream& out_;
  std::ostream& err_;
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Parses `argv` and runs the chosen subcommand. Exit status: 0 success with
/// no conflicts, 2 conflicts found by `detect`, 1 any error.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  CLI::App app{"Evolutionary conflict checking over linear histories", "ecc"};
  app.require_subcommand(1);

  CommonOptions common;
  if (const char* env = std::getenv("ECC_CACHE")) common.cache = env;
  EccOptions eo;
  DetectOptions dopt;
  gen::GenParams gp;
  std::uint64_t seed = 0;
  std::string dir;

  auto add_common = [&](CLI::App* sub, bool history) {
    if (history) {
      sub->add_option("repo", common.repo, "history directory, or project config with --git")->required();
      sub->add_flag("--git", common.git, "treat <repo> as an external project config");
      sub->add_option("--cache", common.cache, "coverage cache file (default $ECC_CACHE)");
    }
    sub->add_option("--jobs", common.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--no-timings", common.no_timings, "omit timings from reports");
    sub->add_option("--out", common.out, "write the JSON report here");
    sub->add_option("--reruns", common.reruns, "extra runs per test and version")->check(CLI::Range(0, 10));
  };
  auto add_ecc = [&](CLI::App* sub) {
    sub->add_option("--budget", eo.budget, "maximum candidate checks")->check(CLI::PositiveNumber);
    sub->add_option("--order", eo.order, "earliest or latest base first")
        ->check(CLI::IsMember({"earliest", "latest"}));
  };

  auto* scan = app.add_subcommand("scan", "candidate counts for every commit");
  add_common(scan, true);
  add_ecc(scan);
  scan->add_flag("--strong", eo.strong, "use strong ECC");

  auto* weak = app.add_subcommand("weak", "weak ECC for one commit");
  auto* strong = app.add_subcommand("strong", "strong ECC for one commit");
  for (auto* sub : {weak, strong}) {
    add_common(sub, true);
    add_ecc(sub);
    sub->add_option("--commit", eo.commit, "commit index (0-based)")->required();
  }

  auto* det = app.add_subcommand("detect", "conflict detection on one merge quadruple");
  add_common(det, true);
  det->add_option("--commit", dopt.commit, "commit index (0-based)")->required();
  auto* base_opt = det->add_option("--base", dopt.base, "history index of the base");
  det->add_option("--synthetic", dopt.synthetic, "id of a synthetic base from strong ECC")->excludes(base_opt);
  det->add_option("--extra-tests", dopt.extra_tests, "directory of additional tests");

  auto* g = app.add_subcommand("gen", "generate a synthetic corpus");
  add_common(g, false);
  g->add_option("--seed", seed, "generator seed")->required();
  g->add_option("--commits", gp.commits, "number of commits")->required();
  g->add_option("-o,--output-dir", dir, "corpus directory")->required();
  g->add_option("--files", gp.files);
  g->add_option("--functions-per-file", gp.functions_per_file);
  g->add_option("--p-feature", gp.p_feature);
  g->add_option("--p-fix", gp.p_fix);
  g->add_option("--p-refactor", gp.p_refactor);
  g->add_option("--p-conflict-pair", gp.p_conflict_pair);
  g->add_option("--p-disjoint", gp.p_disjoint);
  g->add_option("--tests-per-commit", gp.tests_per_commit);
  g->add_option("--flaky-rate", gp.flaky_rate);

  auto* ev = app.add_subcommand("eval", "score engine and detector on a generated corpus");
  add_common(ev, false);
  ev->add_option("dir", dir, "corpus directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kError;
  }

  Runner runner(out, err);
  try {
    if (scan->parsed()) return runner.scan(common, eo);
    if (weak->parsed()) return runner.ecc(common, eo, "weak");
    if (strong->parsed()) {
      eo.strong = true;
      return runner.ecc(common, eo, "strong");
    }
    if (det->parsed()) return runner.detect(common, dopt);
    if (g->parsed()) return runner.generate(common, gp, seed, dir);
    if (ev->parsed()) return runner.evaluate(common, dir);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kError;
  }
  return kError;
}

}  // namespace ecc::cli
