#pragma once

// Machine-readable reports. Keys are sorted (nlohmann::json objects are
// ordered maps), so equal results serialize to equal bytes.

#include <json.hpp>
#include <string>

#include "ecc/detect/detector.hpp"
#include "ecc/engine/types.hpp"
#include "ecc/gen/evaluate.hpp"

namespace ecc::report {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1";

inline json lines_json(const LineSet& lines) {
  json out = json::array();
  for (const auto& l : lines) out.push_back(l.str());
  return out;
}

inline json to_json(const engine::MergeQuadruple& q) {
  return {{"base", q.base->id}, {"left", q.left->id}, {"right", q.right->id}, {"merge", q.merge->id}};
}

inline json to_json(const engine::CandidateBase& c) {
  return {{"base_position", c.base_position},
          {"source", engine::to_string(c.source)},
          {"quadruple", to_json(c.quad)},
          {"checked_tests", c.checked_tests},
          {"low_confidence_tests", c.low_confidence_tests}};
}

inline json to_json(const engine::EccStats& s) {
  return {{"attempted", s.attempted},
          {"patch_failed", s.patch_failed},
          {"build_failed", s.build_failed},
          {"contract_violated", s.contract_violated},
          {"untested", s.untested}};
}

inline json to_json(const engine::EccResult& r) {
  json out = {{"skipped", r.skipped}, {"candidates", json::array()}, {"stats", to_json(r.stats)}};
  if (r.skipped) {
    out["skip_reason"] = engine::to_string(r.reason);
    out["skip_detail"] = r.skip_detail;
    return out;
  }
  out["earliest_index"] = r.earliest_index;
  for (const auto& c : r.candidates) out["candidates"].push_back(to_json(c));
  json trace = json::array();
  for (const auto& s : r.trace) trace.push_back({{"index", s.index}, {"action", s.action}, {"base", s.base_id}});
  out["trace"] = trace;
  return out;
}

inline json to_json(const detect::ConflictReport& r) {
  json findings = json::array();
  for (const auto& f : r.findings) {
    findings.push_back({{"test", f.test},
                        {"rule", detect::to_string(f.rule)},
                        {"outcomes",
                         {{"base", mini::to_string(f.outcomes[0])},
                          {"left", mini::to_string(f.outcomes[1])},
                          {"right", mini::to_string(f.outcomes[2])},
                          {"merge", mini::to_string(f.outcomes[3])}}},
                        {"witnesses", lines_json(f.witnesses)}});
  }
  return {{"quadruple", r.quad_id},
          {"verdict", r.conflict_free() ? "conflict-free" : "conflicts"},
          {"conflicts", r.conflicts()},
          {"findings", findings}};
}

inline json to_json(const gen::Histogram& h) {
  json out = json::object();
  for (std::size_t b = 0; b < gen::kBucketNames.size(); ++b) out[gen::kBucketNames[b]] = h.counts[b];
  out["skipped"] = h.skipped;
  return out;
}

inline json to_json(const gen::Ratio& r) { return {{"num", r.num}, {"den", r.den}, {"value", r.value()}}; }

inline json to_json(const gen::Metrics& m) {
  json detected = json::array();
  for (const auto& [a, b] : m.detected) detected.push_back({a, b});
  json injected = json::array();
  for (const auto& [a, b] : m.injected) injected.push_back({a, b});
  return {{"precision", to_json(m.precision)},
          {"recall", to_json(m.recall)},
          {"histogram", to_json(m.histogram)},
          {"detected", detected},
          {"injected", injected}};
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace ecc::report
