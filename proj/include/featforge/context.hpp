#pragma once

#include <featforge/cache.hpp>
#include <featforge/feature_extract.hpp>
#include <featforge/repo.hpp>

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace featforge::metrics {

// Feature references found in one commit's diffs (source files only, header
// macros filtered out).
struct CommitFeatureRefs {
    std::map<std::string, long> counts;                   // feature -> #refs
    std::map<std::string, std::set<std::string>> files;   // feature -> files
};

CommitFeatureRefs extract_commit_refs(const repo::CommitRecord& rec,
                                      feature::Diagnostics* diag = nullptr);

// The paper's per-release symbols: R (release commits), C (cumulative
// commits), F (changed files), T (affected features), A (files per feature).
struct ReleaseContext {
    repo::Release release;
    std::string snapshot_commit; // last commit of R
    std::vector<const repo::CommitRecord*> release_commits;    // R
    std::vector<const repo::CommitRecord*> cumulative_commits; // C
    std::set<std::string> changed_files;                       // F
    std::set<std::string> features;                            // T
    std::map<std::string, std::set<std::string>> files_of;     // A per feature
    const std::map<std::string, CommitFeatureRefs>* refs = nullptr; // keyed by hash

    const CommitFeatureRefs& refs_of(const std::string& hash) const;
};

// Per-commit reference extraction over a whole mined project, computed once.
std::map<std::string, CommitFeatureRefs> extract_all_refs(
    const cache::ProjectCache& cache, feature::Diagnostics* diag = nullptr);

ReleaseContext build_release_context(
    const cache::ProjectCache& cache, int release_index,
    const std::map<std::string, CommitFeatureRefs>& refs);

// Commit-level scope: R = C = commits[0..n]; the snapshot is commit n.
// Instance features for the scope are those referenced by commit n itself.
ReleaseContext build_commit_context(
    const cache::ProjectCache& cache, size_t commit_index,
    const std::map<std::string, CommitFeatureRefs>& refs);

using SnapshotFn =
    std::function<std::optional<std::string>(const std::string& path)>;

SnapshotFn repo_snapshot_fn(const repo::RepoHandle& repo, const std::string& commit);

} // namespace featforge::metrics
