#include <featforge/context.hpp>

#include <featforge/errors.hpp>

namespace featforge::metrics {

CommitFeatureRefs extract_commit_refs(const repo::CommitRecord& rec,
                                      feature::Diagnostics* diag) {
    CommitFeatureRefs out;
    for (const auto& change : rec.changes) {
        if (!repo::is_source_file(change.path))
            continue;
        auto refs = feature::extract_refs(change.diff_text, feature::ScanMode::diff, diag);
        for (const auto& ref : refs) {
            if (feature::is_header_macro(ref.name)) {
                if (diag)
                    ++diag->header_macros_filtered;
                continue;
            }
            ++out.counts[ref.name];
            out.files[ref.name].insert(change.path);
        }
    }
    return out;
}

const CommitFeatureRefs& ReleaseContext::refs_of(const std::string& hash) const {
    static const CommitFeatureRefs empty;
    if (!refs)
        return empty;
    auto it = refs->find(hash);
    return it == refs->end() ? empty : it->second;
}

std::map<std::string, CommitFeatureRefs> extract_all_refs(
    const cache::ProjectCache& cache, feature::Diagnostics* diag) {
    std::map<std::string, CommitFeatureRefs> refs;
    for (const auto& rec : cache.commits)
        refs[rec.hash] = extract_commit_refs(rec, diag);
    return refs;
}

namespace {

void fill_from_commits(ReleaseContext& ctx,
                       const std::vector<const repo::CommitRecord*>& window,
                       const std::map<std::string, CommitFeatureRefs>& refs) {
    for (const auto* rec : window) {
        for (const auto& change : rec->changes)
            ctx.changed_files.insert(change.path);
        auto it = refs.find(rec->hash);
        if (it == refs.end())
            continue;
        for (const auto& [feat, files] : it->second.files) {
            ctx.features.insert(feat);
            ctx.files_of[feat].insert(files.begin(), files.end());
        }
    }
}

} // namespace

ReleaseContext build_release_context(
    const cache::ProjectCache& cache, int release_index,
    const std::map<std::string, CommitFeatureRefs>& refs) {
    if (release_index < 0 || release_index >= static_cast<int>(cache.releases.size()))
        throw Error("release index out of range: " + std::to_string(release_index));

    ReleaseContext ctx;
    ctx.release = cache.releases[static_cast<size_t>(release_index)];
    ctx.snapshot_commit = ctx.release.end_commit;
    ctx.refs = &refs;

    std::map<std::string, int> release_of;
    for (size_t i = 0; i < cache.releases.size(); ++i)
        for (const auto& hash : cache.releases[i].commits)
            release_of[hash] = static_cast<int>(i);

    for (const auto& rec : cache.commits) {
        auto it = release_of.find(rec.hash);
        if (it == release_of.end() || it->second > release_index)
            continue;
        ctx.cumulative_commits.push_back(&rec);
        if (it->second == release_index)
            ctx.release_commits.push_back(&rec);
    }
    fill_from_commits(ctx, ctx.release_commits, refs);
    return ctx;
}

ReleaseContext build_commit_context(
    const cache::ProjectCache& cache, size_t commit_index,
    const std::map<std::string, CommitFeatureRefs>& refs) {
    if (commit_index >= cache.commits.size())
        throw Error("commit index out of range: " + std::to_string(commit_index));

    ReleaseContext ctx;
    ctx.refs = &refs;
    const auto& scope = cache.commits[commit_index];
    ctx.release.tag = scope.hash;
    ctx.release.index = static_cast<int>(commit_index);
    ctx.release.end_commit = scope.hash;
    ctx.snapshot_commit = scope.hash;
    for (size_t i = 0; i <= commit_index; ++i) {
        ctx.release.commits.push_back(cache.commits[i].hash);
        ctx.release_commits.push_back(&cache.commits[i]);
        ctx.cumulative_commits.push_back(&cache.commits[i]);
    }
    fill_from_commits(ctx, ctx.release_commits, refs);
    return ctx;
}

SnapshotFn repo_snapshot_fn(const repo::RepoHandle& repo, const std::string& commit) {
    return [&repo, commit](const std::string& path) {
        return repo::file_snapshot(repo, commit, path);
    };
}

} // namespace featforge::metrics
