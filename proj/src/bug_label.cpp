#include <featforge/bug_label.hpp>

#include <featforge/errors.hpp>

#include <algorithm>
#include <cctype>

#include <json.hpp>

namespace featforge::label {

namespace {

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::string lowercase(std::string s) {
    for (char& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

const std::vector<std::string>& default_keywords() {
    static const std::vector<std::string> keywords = {
        "bug", "bugs", "bugfix", "error", "fail", "fix", "fixed", "fixes"};
    return keywords;
}

CorrectiveVerdict classify_corrective(const std::string& message_first_line,
                                      const std::vector<std::string>& keywords) {
    CorrectiveVerdict verdict;
    std::string line = lowercase(message_first_line);
    size_t best_pos = std::string::npos;
    std::string best_keyword;
    for (const auto& raw : keywords) {
        std::string kw = lowercase(raw);
        size_t pos = 0;
        while ((pos = line.find(kw, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || !word_char(line[pos - 1]);
            bool right_ok =
                pos + kw.size() >= line.size() || !word_char(line[pos + kw.size()]);
            if (left_ok && right_ok) {
                if (pos < best_pos || (pos == best_pos && kw.size() > best_keyword.size())) {
                    best_pos = pos;
                    best_keyword = kw;
                }
                break;
            }
            ++pos;
        }
    }
    if (best_pos != std::string::npos) {
        verdict.is_corrective = true;
        verdict.matched_keyword = best_keyword;
    }
    return verdict;
}

bool szz_skips_line(const std::string& text) {
    std::string t = trim(text);
    if (t.empty())
        return true;
    if (t.rfind("//", 0) == 0 || t.rfind("*/", 0) == 0 || t[0] == '*')
        return true;
    if (t.rfind("/*", 0) == 0) {
        // Skip unless code follows the comment close on the same line.
        size_t close = t.find("*/");
        if (close == std::string::npos)
            return true;
        return trim(t.substr(close + 2)).empty();
    }
    return false;
}

std::string BugTrace::to_json() const {
    nlohmann::json blamed = nlohmann::json::object();
    for (const auto& [intro, lines] : blamed_lines) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [path, line] : lines)
            arr.push_back(nlohmann::json::array({path, line}));
        blamed[intro] = std::move(arr);
    }
    nlohmann::json j{{"corrective", corrective},
                     {"introducers", introducers},
                     {"blamed_lines", std::move(blamed)}};
    return j.dump();
}

BugTrace szz_trace(const repo::RepoHandle& repo, const repo::CommitRecord& corrective) {
    BugTrace trace;
    trace.corrective = corrective.hash;
    if (corrective.parent_hashes.empty())
        return trace;
    const std::string& parent = corrective.parent_hashes[0];

    for (const auto& change : corrective.changes) {
        if (change.deleted_lines.empty())
            continue;
        std::vector<int> lines;
        for (const auto& del : change.deleted_lines)
            if (!szz_skips_line(del.text))
                lines.push_back(del.line);
        if (lines.empty())
            continue;
        // Deleted lines are numbered in the parent; renames blame the old path.
        auto blamed = repo::blame_lines(repo, parent, change.old_path(), lines);
        for (size_t i = 0; i < lines.size(); ++i) {
            if (blamed[i].empty())
                continue;
            trace.introducers.insert(blamed[i]);
            trace.blamed_lines[blamed[i]].push_back({change.old_path(), lines[i]});
        }
    }
    return trace;
}

std::string to_string(Label label) {
    return label == Label::defective ? "defective" : "clean";
}

std::map<std::string, Label> label_files(
    const std::set<std::string>& changed_files,
    const std::vector<std::string>& release_commits,
    const std::set<std::string>& introducers,
    const std::map<std::string, std::set<std::string>>& files_changed_by_commit) {
    std::set<std::string> defective;
    for (const auto& hash : release_commits) {
        if (!introducers.count(hash))
            continue;
        auto it = files_changed_by_commit.find(hash);
        if (it == files_changed_by_commit.end())
            continue;
        for (const auto& path : it->second)
            defective.insert(path);
    }
    std::map<std::string, Label> labels;
    for (const auto& path : changed_files)
        labels[path] = defective.count(path) ? Label::defective : Label::clean;
    return labels;
}

ProjectLabels trace_project(const repo::RepoHandle& repo,
                            const std::vector<repo::CommitRecord>& commits,
                            const std::vector<std::string>& keywords) {
    ProjectLabels labels;
    for (const auto& rec : commits) {
        if (!classify_corrective(rec.message_first_line, keywords).is_corrective)
            continue;
        labels.corrective.push_back(rec.hash);
        auto trace = szz_trace(repo, rec);
        labels.introducers.insert(trace.introducers.begin(), trace.introducers.end());
        labels.traces.push_back(std::move(trace));
    }
    return labels;
}

std::map<std::string, Label> label_features(
    const std::map<std::string, std::set<std::string>>& files_of,
    const std::map<std::string, Label>& file_labels) {
    std::map<std::string, Label> labels;
    for (const auto& [feature, files] : files_of) {
        if (files.empty())
            throw FeatureWithoutFiles("feature has no associated files: " + feature);
        Label label = Label::clean;
        for (const auto& path : files) {
            auto it = file_labels.find(path);
            if (it != file_labels.end() && it->second == Label::defective) {
                label = Label::defective;
                break;
            }
        }
        labels[feature] = label;
    }
    return labels;
}

} // namespace featforge::label
