#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace featforge::repo {

enum class ChangeKind { added, modified, deleted, renamed };

std::string to_string(ChangeKind kind);
ChangeKind change_kind_from_string(const std::string& s);

struct LineEntry {
    int line = 0; // 1-based; new-file numbering for added, old-file for deleted
    std::string text;

    bool operator==(const LineEntry&) const = default;
};

struct FileChange {
    std::string path; // repo-relative; post-rename path for renamed files
    ChangeKind kind = ChangeKind::modified;
    std::vector<LineEntry> added_lines;
    std::vector<LineEntry> deleted_lines;
    std::string diff_text; // unified diff with 3 context lines

    // Pre-rename path, recovered from the diff header; path otherwise.
    std::string old_path() const;
};

struct CommitRecord {
    std::string hash;
    std::vector<std::string> parent_hashes;
    std::string author; // lowercase(name) + "<" + lowercase(email) + ">"
    std::int64_t timestamp = 0;
    std::string message_first_line;
    std::string message_full;
    std::vector<FileChange> changes;

    int added_total() const;
    int deleted_total() const;
};

struct Release {
    std::string tag;
    int index = 0; // 0-based chronological position
    std::string end_commit;
    std::vector<std::string> commits; // chronological, end_commit last
};

// Read-only view of one git repository; safe to share across threads.
class RepoHandle {
public:
    // Throws NotARepository / CorruptRepository.
    static RepoHandle open(const std::filesystem::path& path);

    const std::filesystem::path& path() const { return path_; }

    // Raw git plumbing; exposed so that tests and tooling can reuse it.
    std::string git(const std::vector<std::string>& args,
                    const std::string& stdin_data = {}) const;

private:
    explicit RepoHandle(std::filesystem::path path) : path_(std::move(path)) {}
    std::filesystem::path path_;
};

// Tagged releases matching tag_filter, ordered by end-commit timestamp. Each
// commit lands in the earliest release from whose end commit it is reachable;
// commits after the last tag are not assigned to any release.
std::vector<Release> resolve_releases(const RepoHandle& repo,
                                      const std::string& tag_filter);

// One record per commit in the release, chronological order, diffs against
// the first parent (empty tree for roots).
std::vector<CommitRecord> walk_commits(const RepoHandle& repo,
                                       const Release& release);

CommitRecord read_commit(const RepoHandle& repo, const std::string& hash);

// File content at a commit, lossily decoded to UTF-8. nullopt when the path
// is not in the tree. Throws MissingObject when the commit itself is gone.
std::optional<std::string> file_snapshot(const RepoHandle& repo,
                                         const std::string& commit,
                                         const std::string& path);

// Last commit that introduced or modified each of the requested (1-based)
// lines of path as of `commit`. Follows renames.
std::vector<std::string> blame_lines(const RepoHandle& repo,
                                     const std::string& commit,
                                     const std::string& path,
                                     const std::vector<int>& lines);

// Files with these extensions are scanned for feature references.
bool is_source_file(const std::string& path);

} // namespace featforge::repo
