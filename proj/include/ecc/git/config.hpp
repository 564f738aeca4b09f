#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecc/core/text.hpp"
#include "ecc/git/process.hpp"
#include "ecc/repo/layout.hpp"

namespace ecc::git {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// How to build and test an external project. Command templates run through
/// /bin/sh in the version's worktree; `{test}`, `{coverage_out}` and `{seed}`
/// expand shell-quoted.
struct ExternalProjectConfig {
  std::filesystem::path repo_path;
  std::vector<std::string> source_roots;  // empty: the whole tree
  std::string build_cmd;
  std::string list_tests_cmd;
  std::string run_test_cmd;
  int timeout_secs = 60;

  bool in_roots(const std::string& path) const {
    if (source_roots.empty()) return true;
    for (const auto& r : source_roots) {
      if (path == r || text::starts_with(path, r + "/")) return true;
    }
    return false;
  }

  void validate() const {
    if (repo_path.empty()) throw ConfigError("missing key 'repo_path'");
    if (build_cmd.empty()) throw ConfigError("missing key 'build_cmd'");
    if (list_tests_cmd.empty()) throw ConfigError("missing key 'list_tests_cmd'");
    if (run_test_cmd.empty()) throw ConfigError("missing key 'run_test_cmd'");
    for (const char* ph : {"{test}", "{coverage_out}"}) {
      if (run_test_cmd.find(ph) == std::string::npos) {
        throw ConfigError(std::string("run_test_cmd must contain ") + ph);
      }
    }
    if (timeout_secs <= 0) throw ConfigError("timeout_secs must be positive");
  }
};

/// Parses `key = value` lines; `#` starts a comment line. A relative
/// repo_path is taken relative to `base_dir`.
inline ExternalProjectConfig parse_config(std::string_view content, const std::filesystem::path& base_dir = {}) {
  ExternalProjectConfig cfg;
  std::map<std::string, bool> seen;
  int n = 0;
  for (const auto& raw : text::split_lines(content)) {
    ++n;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(n) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string value(text::trim(line.substr(eq + 1)));
    if (seen[key]) throw ConfigError(where + "duplicate key '" + key + "'");
    seen[key] = true;
    if (key == "repo_path") {
      cfg.repo_path = value;
    } else if (key == "source_roots") {
      for (const auto& r : text::split(value, ',')) {
        std::string root(text::trim(r));
        while (!root.empty() && root.back() == '/') root.pop_back();
        if (!root.empty()) cfg.source_roots.push_back(root);
      }
    } else if (key == "build_cmd") {
      cfg.build_cmd = value;
    } else if (key == "list_tests_cmd") {
      cfg.list_tests_cmd = value;
    } else if (key == "run_test_cmd") {
      cfg.run_test_cmd = value;
    } else if (key == "timeout_secs") {
      std::size_t used = 0;
      int v = 0;
      try {
        v = std::stoi(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != value.size()) throw ConfigError(where + "timeout_secs is not an integer");
      cfg.timeout_secs = v;
    } else {
      throw ConfigError(where + "unknown key '" + key + "'");
    }
  }
  if (!cfg.repo_path.empty() && cfg.repo_path.is_relative() && !base_dir.empty()) {
    cfg.repo_path = base_dir / cfg.repo_path;
  }
  cfg.validate();
  return cfg;
}

inline ExternalProjectConfig load_config(const std::filesystem::path& file) {
  std::string content;
  try {
    content = ecc::detail::read_file(file);
  } catch (const LoadError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(content, file.parent_path());
}

/// Replaces every `{key}` in `tmpl` with the shell-quoted value.
inline std::string expand(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  for (std::size_t i = 0; i < tmpl.size();) {
    bool done = false;
    if (tmpl[i] == '{') {
      for (const auto& [k, v] : values) {
        const std::string ph = "{" + k + "}";
        if (tmpl.compare(i, ph.size(), ph) == 0) {
          out += shell_quote(v);
          i += ph.size();
          done = true;
          break;
        }
      }
    }
    if (!done) out += tmpl[i++];
  }
  return out;
}

}  // namespace ecc::git
