#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ecc/core/text.hpp"
#include "ecc/git/config.hpp"
#include "ecc/git/process.hpp"
#include "ecc/repo/snapshot.hpp"

namespace ecc::git {

class GitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string git(const std::filesystem::path& repo, std::vector<std::string> args) {
  args.insert(args.begin(), {"git", "-C", repo.string()});
  auto r = run_process(args, {});
  if (r.exit_code != 0) {
    std::string cmd;
    for (std::size_t i = 3; i < args.size(); ++i) cmd += (i > 3 ? " " : "") + args[i];
    throw GitError("git " + cmd + " failed: " + std::string(text::trim(r.output)));
  }
  return r.output;
}

/// Full commit id of `rev`.
inline std::string resolve(const std::filesystem::path& repo, const std::string& rev) {
  if (!std::filesystem::is_directory(repo)) throw GitError("repository " + repo.string() + " is not readable");
  auto r = run_process({"git", "-C", repo.string(), "rev-parse", "--verify", "--quiet", rev + "^{commit}"}, {});
  if (r.exit_code != 0) throw GitError("unknown revision '" + rev + "'");
  return std::string(text::trim(r.output));
}

struct SnapshotAt {
  Snapshot snapshot;
  std::vector<std::string> warnings;  // skipped non-text files
};

/// Text files of `rev` under the configured source roots.
inline SnapshotAt snapshot_at(const ExternalProjectConfig& cfg, const std::string& rev) {
  const std::string id = resolve(cfg.repo_path, rev);
  SnapshotAt out;
  const std::string listing = git(cfg.repo_path, {"ls-tree", "-r", "-z", "--full-tree", id});
  for (const auto& entry : text::split(listing, '\0')) {
    if (entry.empty()) continue;
    const auto tab = entry.find('\t');
    const auto meta = text::split(entry.substr(0, tab), ' ');
    const std::string path = entry.substr(tab + 1);
    if (meta.size() != 3 || meta[1] != "blob" || !cfg.in_roots(path)) continue;
    if (meta[0] == "120000") {
      out.warnings.push_back(path + ": symbolic link skipped");
      continue;
    }
    const std::string content = git(cfg.repo_path, {"cat-file", "blob", meta[2]});
    if (content.find('\0') != std::string::npos) {
      out.warnings.push_back(path + ": binary file skipped");
      continue;
    }
    out.snapshot.set_file(path, text::split_lines(content));
  }
  return out;
}

/// First-parent chain ending at `head`, oldest first.
inline LinearHistory first_parent_history(const ExternalProjectConfig& cfg, const std::string& head = "HEAD") {
  const std::string tip = resolve(cfg.repo_path, head);
  const std::string log = git(cfg.repo_path, {"log", "--first-parent", "--reverse", "-z", "--format=%H%x01%an%x01%s", tip});
  std::vector<VersionPtr> versions;
  for (const auto& rec : text::split(log, '\0')) {
    const auto line = text::trim(rec);
    if (line.empty()) continue;
    const auto f = text::split(line, '\x01');
    if (f.size() != 3) throw GitError("unexpected git log record");
    versions.push_back(make_version(f[0], static_cast<int>(versions.size()), snapshot_at(cfg, f[0]).snapshot, f[1], f[2]));
  }
  if (versions.empty()) throw GitError("no commits reachable from " + head);
  return LinearHistory(std::move(versions));
}

}  // namespace ecc::git
