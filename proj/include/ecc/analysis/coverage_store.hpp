#pragma once

#include <atomic>
#include <charconv>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ecc/analysis/backend.hpp"
#include "ecc/repo/blame.hpp"

namespace ecc::analysis {

struct RerunPolicy {
  int reruns = 0;  // extra executions per (test, version)
  bool reuse_by_dependency = true;

  static constexpr int kMaxReruns = 10;
};

class CacheFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Execution records keyed by (test content hash, version id), one per run.
/// Safe for concurrent use; racing computations of one key insert equal records.
class CoverageStore {
 public:
  explicit CoverageStore(ExecutionBackend& backend, RerunPolicy policy = {}) : backend_(backend), policy_(policy) {
    if (policy.reruns < 0 || policy.reruns > RerunPolicy::kMaxReruns) {
      throw std::invalid_argument("reruns must be between 0 and " + std::to_string(RerunPolicy::kMaxReruns));
    }
  }

  ExecutionBackend& backend() { return backend_; }
  const RerunPolicy& policy() const { return policy_; }
  ComparisonCache& comparisons() { return comparisons_; }

  static std::uint64_t seed_for(const std::string& hash, const std::string& version_id, int run) {
    return splitmix64(fnv1a64(hash + "\t" + version_id)) + static_cast<std::uint64_t>(run);
  }

  /// Runs 0..reruns of `t` on `v` (cached, reused or executed), merged: the
  /// covered set is the union over runs; outcome, steps and seed are run 0's.
  ExecutionRecord get_execution(const TestCase& t, const VersionPtr& v) {
    auto runs = get_runs(t, v);
    ExecutionRecord merged = runs.front();
    for (std::size_t r = 1; r < runs.size(); ++r) merged.covered.insert(runs[r].covered.begin(), runs[r].covered.end());
    return merged;
  }

  std::vector<ExecutionRecord> get_runs(const TestCase& t, const VersionPtr& v) {
    const Key key{t.content_hash, v->id};
    const int runs = 1 + policy_.reruns;
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < runs; ++r) seeds.push_back(seed_for(t.content_hash, v->id, r));

    std::vector<ExecutionRecord> out(seeds.size());
    std::vector<bool> have(seeds.size(), false);
    bool any = false;
    {
      std::lock_guard lock(mu_);
      if (auto it = records_.find(key); it != records_.end()) {
        for (std::size_t r = 0; r < seeds.size(); ++r) {
          for (const auto& rec : it->second) {
            if (rec.seed == seeds[r]) {
              out[r] = rec;
              have[r] = true;
              any = true;
              break;
            }
          }
        }
      }
    }
    if (std::find(have.begin(), have.end(), false) == have.end()) return out;

    std::string fingerprint;
    if (policy_.reuse_by_dependency) fingerprint = backend_.reuse_fingerprint(t, *v);
    if (!any && !fingerprint.empty()) {
      std::pair<VersionPtr, ExecutionRecord> donor;
      {
        std::lock_guard lock(mu_);
        if (auto it = donors_.find(fingerprint); it != donors_.end()) donor = it->second;
      }
      if (donor.first && donor.first->id != v->id) {
        if (auto adapted = backend_.adapt(donor.second, t, *donor.first, *v)) {
          for (std::size_t r = 0; r < seeds.size(); ++r) {
            out[r] = *adapted;
            out[r].seed = seeds[r];
          }
          ++reused_;
          store(key, out);
          return out;
        }
      }
    }

    for (std::size_t r = 0; r < seeds.size(); ++r) {
      if (have[r]) continue;
      out[r] = backend_.execute(t, *v, seeds[r]);
      ++executions_;
    }
    store(key, out);
    if (!fingerprint.empty()) {
      std::lock_guard lock(mu_);
      donors_.try_emplace(fingerprint, v, out.front());
    }
    return out;
  }

  std::vector<ExecutionRecord> records(const std::string& hash, const std::string& version_id) const {
    std::lock_guard lock(mu_);
    auto it = records_.find({hash, version_id});
    return it == records_.end() ? std::vector<ExecutionRecord>{} : it->second;
  }

  std::size_t executions() const { return executions_; }
  std::size_t reused() const { return reused_; }

  /// `hash<TAB>version<TAB>outcome<TAB>seed<TAB>steps<TAB>path:line,...`
  void save(std::ostream& os) const {
    std::lock_guard lock(mu_);
    for (const auto& [key, recs] : records_) {
      for (const auto& r : recs) {
        os << key.first << '\t' << key.second << '\t' << mini::to_string(r.outcome) << '\t' << r.seed << '\t'
           << r.steps << '\t' << to_string(r.covered) << '\n';
      }
    }
  }

  void load(std::istream& is) {
    std::string line;
    int number = 0;
    while (std::getline(is, line)) {
      ++number;
      if (line.empty()) continue;
      auto fail = [&](const std::string& why) {
        return CacheFormatError("cache line " + std::to_string(number) + ": " + why);
      };
      auto fields = text::split(line, '\t');
      if (fields.size() != 6) throw fail("expected 6 fields");
      ExecutionRecord r;
      r.test_hash = fields[0];
      r.version_id = fields[1];
      if (!mini::parse_outcome(fields[2], r.outcome)) throw fail("unknown outcome '" + fields[2] + "'");
      if (!parse_number(fields[3], r.seed)) throw fail("bad seed");
      if (!parse_number(fields[4], r.steps)) throw fail("bad steps");
      if (!fields[5].empty()) {
        for (const auto& item : text::split(fields[5], ',')) {
          auto colon = item.rfind(':');
          int ln = 0;
          if (colon == std::string::npos || colon == 0 || !parse_number(item.substr(colon + 1), ln) || ln < 1) {
            throw fail("bad line reference '" + item + "'");
          }
          r.covered.insert({item.substr(0, colon), ln});
        }
      }
      std::lock_guard lock(mu_);
      auto& recs = records_[{r.test_hash, r.version_id}];
      auto same_seed = std::find_if(recs.begin(), recs.end(), [&](const ExecutionRecord& x) { return x.seed == r.seed; });
      if (same_seed == recs.end()) {
        recs.push_back(std::move(r));
      } else {
        *same_seed = std::move(r);
      }
    }
  }

 private:
  using Key = std::pair<std::string, std::string>;

  template <typename N>
  static bool parse_number(std::string_view s, N& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size();
  }

  void store(const Key& key, const std::vector<ExecutionRecord>& runs) {
    std::lock_guard lock(mu_);
    auto& recs = records_[key];
    for (const auto& r : runs) {
      auto it = std::find_if(recs.begin(), recs.end(), [&](const ExecutionRecord& x) { return x.seed == r.seed; });
      if (it == recs.end()) recs.push_back(r);
    }
  }

  ExecutionBackend& backend_;
  RerunPolicy policy_;
  ComparisonCache comparisons_;
  mutable std::mutex mu_;
  std::map<Key, std::vector<ExecutionRecord>> records_;
  std::map<std::string, std::pair<VersionPtr, ExecutionRecord>> donors_;
  std::atomic<std::size_t> executions_{0};
  std::atomic<std::size_t> reused_{0};
};

}  // namespace ecc::analysis
