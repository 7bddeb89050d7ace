#pragma once

#include <featforge/repo.hpp>

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace featforge::label {

struct CorrectiveVerdict {
    std::string commit;
    bool is_corrective = false;
    std::optional<std::string> matched_keyword;
};

// "bug," "bugs," "bugfix," "error," "fail," "fix," "fixed," "fixes"
const std::vector<std::string>& default_keywords();

// Case-insensitive whole-word match against the first message line only.
CorrectiveVerdict classify_corrective(
    const std::string& message_first_line,
    const std::vector<std::string>& keywords = default_keywords());

struct BugTrace {
    std::string corrective;
    std::set<std::string> introducers;
    // introducer -> (path, line in the corrective's parent snapshot)
    std::map<std::string, std::vector<std::pair<std::string, int>>> blamed_lines;

    std::string to_json() const;
};

// Blames each non-blank, non-comment deleted line of the corrective commit
// on the parent snapshot. Root commits yield an empty trace.
BugTrace szz_trace(const repo::RepoHandle& repo, const repo::CommitRecord& corrective);

// True for lines SZZ skips: blank and comment-only lines.
bool szz_skips_line(const std::string& text);

enum class Label { defective, clean };

std::string to_string(Label label);

// File defective iff some introducer inside the release changes it. The
// domain is exactly changed_files.
std::map<std::string, Label> label_files(
    const std::set<std::string>& changed_files,
    const std::vector<std::string>& release_commits,
    const std::set<std::string>& introducers,
    const std::map<std::string, std::set<std::string>>& files_changed_by_commit);

// Feature defective iff any of its files is. Throws FeatureWithoutFiles when
// a feature has an empty file set.
std::map<std::string, Label> label_features(
    const std::map<std::string, std::set<std::string>>& files_of,
    const std::map<std::string, Label>& file_labels);

struct ProjectLabels {
    std::vector<std::string> corrective;
    std::set<std::string> introducers;
    std::vector<BugTrace> traces;
};

// Classifies every commit and runs SZZ on the corrective ones.
ProjectLabels trace_project(const repo::RepoHandle& repo,
                            const std::vector<repo::CommitRecord>& commits,
                            const std::vector<std::string>& keywords = default_keywords());

} // namespace featforge::label
