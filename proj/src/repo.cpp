#include <featforge/repo.hpp>

#include <featforge/errors.hpp>
#include <featforge/process.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace featforge::repo {

namespace {

std::string lowercase(std::string s) {
    for (char& c : s)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    size_t start = 0;
    while (start <= text.size()) {
        size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            if (start < text.size())
                lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

std::int64_t parse_i64(const std::string& s) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc())
        throw CorruptRepository("unparseable number from git: " + s);
    (void)ptr;
    return v;
}

struct RawEntry {
    char status = 'M';
    std::string old_path;
    std::string new_path;
};

// Parses `git diff-tree -z` raw output: ":<modes/shas> <status>\0path[\0path]".
std::vector<RawEntry> parse_raw_z(const std::string& out) {
    std::vector<RawEntry> entries;
    size_t i = 0;
    while (i < out.size()) {
        if (out[i] != ':')
            break;
        size_t meta_end = out.find('\0', i);
        if (meta_end == std::string::npos)
            break;
        std::string meta = out.substr(i, meta_end - i);
        size_t last_sp = meta.rfind(' ');
        std::string status_field = meta.substr(last_sp + 1);
        RawEntry e;
        e.status = status_field.empty() ? 'M' : status_field[0];
        size_t p1_end = out.find('\0', meta_end + 1);
        if (p1_end == std::string::npos)
            break;
        std::string p1 = out.substr(meta_end + 1, p1_end - meta_end - 1);
        i = p1_end + 1;
        if (e.status == 'R' || e.status == 'C') {
            size_t p2_end = out.find('\0', i);
            if (p2_end == std::string::npos)
                break;
            e.old_path = p1;
            e.new_path = out.substr(i, p2_end - i);
            i = p2_end + 1;
        } else {
            e.old_path = p1;
            e.new_path = p1;
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

ChangeKind kind_from_status(char status) {
    switch (status) {
    case 'A':
        return ChangeKind::added;
    case 'D':
        return ChangeKind::deleted;
    case 'R':
        return ChangeKind::renamed;
    case 'C':
        return ChangeKind::added; // a copy creates a new file
    default:
        return ChangeKind::modified;
    }
}

// Splits a unified diff into one section per file, in diff order.
std::vector<std::string> split_patch_sections(const std::string& patch) {
    std::vector<std::string> sections;
    size_t pos = 0;
    const std::string marker = "diff --git ";
    std::vector<size_t> starts;
    while (pos < patch.size()) {
        bool at_line_start = pos == 0 || patch[pos - 1] == '\n';
        if (at_line_start && patch.compare(pos, marker.size(), marker) == 0)
            starts.push_back(pos);
        pos = patch.find('\n', pos);
        if (pos == std::string::npos)
            break;
        ++pos;
    }
    for (size_t k = 0; k < starts.size(); ++k) {
        size_t end = (k + 1 < starts.size()) ? starts[k + 1] : patch.size();
        sections.push_back(patch.substr(starts[k], end - starts[k]));
    }
    return sections;
}

void parse_hunks(const std::string& section, std::vector<LineEntry>& added,
                 std::vector<LineEntry>& deleted) {
    int old_line = 0;
    int new_line = 0;
    bool in_hunk = false;
    for (const auto& line : split_lines(section)) {
        if (line.rfind("@@", 0) == 0) {
            // @@ -old_start,old_count +new_start,new_count @@
            size_t minus = line.find('-');
            size_t plus = line.find('+', minus);
            if (minus == std::string::npos || plus == std::string::npos)
                continue;
            old_line = static_cast<int>(std::strtol(line.c_str() + minus + 1, nullptr, 10));
            new_line = static_cast<int>(std::strtol(line.c_str() + plus + 1, nullptr, 10));
            in_hunk = true;
            continue;
        }
        if (!in_hunk || line.empty())
            continue;
        switch (line[0]) {
        case '+':
            added.push_back({new_line, utf8_lossy(line.substr(1))});
            ++new_line;
            break;
        case '-':
            deleted.push_back({old_line, utf8_lossy(line.substr(1))});
            ++old_line;
            break;
        case ' ':
            ++old_line;
            ++new_line;
            break;
        case '\\': // "\ No newline at end of file"
            break;
        default:
            in_hunk = false;
            break;
        }
    }
}

} // namespace

std::string to_string(ChangeKind kind) {
    switch (kind) {
    case ChangeKind::added:
        return "added";
    case ChangeKind::modified:
        return "modified";
    case ChangeKind::deleted:
        return "deleted";
    case ChangeKind::renamed:
        return "renamed";
    }
    return "modified";
}

ChangeKind change_kind_from_string(const std::string& s) {
    if (s == "added")
        return ChangeKind::added;
    if (s == "deleted")
        return ChangeKind::deleted;
    if (s == "renamed")
        return ChangeKind::renamed;
    if (s == "modified")
        return ChangeKind::modified;
    throw SchemaMismatch("unknown change kind: " + s);
}

std::string FileChange::old_path() const {
    if (kind != ChangeKind::renamed)
        return path;
    for (const auto& line : split_lines(diff_text)) {
        if (line.rfind("rename from ", 0) == 0)
            return line.substr(12);
    }
    return path;
}

int CommitRecord::added_total() const {
    int n = 0;
    for (const auto& c : changes)
        n += static_cast<int>(c.added_lines.size());
    return n;
}

int CommitRecord::deleted_total() const {
    int n = 0;
    for (const auto& c : changes)
        n += static_cast<int>(c.deleted_lines.size());
    return n;
}

RepoHandle RepoHandle::open(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path))
        throw NotARepository("path does not exist: " + path.string());
    auto result = run_process({"git", "-C", path.string(), "rev-parse", "--git-dir"});
    if (!result.ok()) {
        if (result.err.find("not a git repository") != std::string::npos)
            throw NotARepository("not a git repository: " + path.string());
        throw CorruptRepository("git rev-parse failed for " + path.string() + ": " +
                                result.err);
    }
    return RepoHandle(path);
}

std::string RepoHandle::git(const std::vector<std::string>& args,
                            const std::string& stdin_data) const {
    std::vector<std::string> argv = {"git", "-C", path_.string()};
    argv.insert(argv.end(), args.begin(), args.end());
    auto result = run_process(argv, stdin_data);
    if (!result.ok())
        throw CorruptRepository("git " + (args.empty() ? "" : args[0]) +
                                " failed: " + result.err);
    return result.out;
}

std::vector<Release> resolve_releases(const RepoHandle& repo,
                                      const std::string& tag_filter) {
    std::string tag_out = repo.git({"tag", "--list", tag_filter});
    std::vector<std::string> tags;
    for (auto& line : split_lines(tag_out))
        if (!line.empty())
            tags.push_back(line);
    if (tags.empty())
        throw NoTagsMatched("no tags match pattern: " + tag_filter);

    struct TagInfo {
        std::string tag;
        std::string end_commit;
        std::int64_t timestamp;
    };
    std::vector<TagInfo> infos;
    for (const auto& tag : tags) {
        std::string end = repo.git({"rev-list", "-n", "1", tag});
        if (!end.empty() && end.back() == '\n')
            end.pop_back();
        std::string ts = repo.git({"log", "-1", "--format=%at", end});
        infos.push_back({tag, end, parse_i64(split_lines(ts)[0])});
    }
    std::sort(infos.begin(), infos.end(), [](const TagInfo& a, const TagInfo& b) {
        if (a.timestamp != b.timestamp)
            return a.timestamp < b.timestamp;
        return a.tag < b.tag;
    });

    std::vector<Release> releases;
    std::vector<std::string> earlier_ends;
    for (size_t i = 0; i < infos.size(); ++i) {
        std::vector<std::string> args = {"log", "--format=%H %at", infos[i].end_commit};
        for (const auto& prev : earlier_ends)
            args.push_back("^" + prev);
        std::string out = repo.git(args);

        struct Stamped {
            std::string hash;
            std::int64_t ts;
        };
        std::vector<Stamped> stamped;
        for (const auto& line : split_lines(out)) {
            if (line.empty())
                continue;
            size_t sp = line.find(' ');
            stamped.push_back({line.substr(0, sp), parse_i64(line.substr(sp + 1))});
        }
        std::sort(stamped.begin(), stamped.end(), [](const Stamped& a, const Stamped& b) {
            if (a.ts != b.ts)
                return a.ts < b.ts;
            return a.hash < b.hash;
        });

        Release rel;
        rel.tag = infos[i].tag;
        rel.index = static_cast<int>(i);
        rel.end_commit = infos[i].end_commit;
        for (auto& s : stamped)
            rel.commits.push_back(std::move(s.hash));
        releases.push_back(std::move(rel));
        earlier_ends.push_back(infos[i].end_commit);
    }
    return releases;
}

CommitRecord read_commit(const RepoHandle& repo, const std::string& hash) {
    auto check = run_process(
        {"git", "-C", repo.path().string(), "cat-file", "-e", hash + "^{commit}"});
    if (!check.ok())
        throw MissingObject("commit not found: " + hash);

    std::string meta = repo.git(
        {"log", "-1", "--format=%H%x00%P%x00%an%x00%ae%x00%at%x00%B%x00", hash});
    std::vector<std::string> fields;
    size_t start = 0;
    while (fields.size() < 6) {
        size_t nul = meta.find('\0', start);
        if (nul == std::string::npos)
            throw CorruptRepository("unexpected git log output for " + hash);
        fields.push_back(meta.substr(start, nul - start));
        start = nul + 1;
    }

    CommitRecord rec;
    rec.hash = fields[0];
    {
        std::istringstream parents(fields[1]);
        std::string p;
        while (parents >> p)
            rec.parent_hashes.push_back(p);
    }
    rec.author = lowercase(utf8_lossy(fields[2])) + "<" + lowercase(utf8_lossy(fields[3])) + ">";
    rec.timestamp = parse_i64(fields[4]);
    rec.message_full = utf8_lossy(fields[5]);
    while (!rec.message_full.empty() && rec.message_full.back() == '\n')
        rec.message_full.pop_back();
    size_t nl = rec.message_full.find('\n');
    rec.message_first_line =
        nl == std::string::npos ? rec.message_full : rec.message_full.substr(0, nl);

    std::vector<std::string> base = {"diff-tree", "-r", "-M", "--no-color",
                                     "--no-commit-id"};
    std::vector<std::string> objects;
    if (rec.parent_hashes.empty()) {
        objects = {"--root", rec.hash};
    } else {
        objects = {rec.parent_hashes[0], rec.hash};
    }

    std::vector<std::string> raw_args = base;
    raw_args.push_back("-z");
    raw_args.insert(raw_args.end(), objects.begin(), objects.end());
    auto raw_entries = parse_raw_z(repo.git(raw_args));

    std::vector<std::string> patch_args = base;
    patch_args.push_back("--unified=3");
    patch_args.push_back("-p");
    patch_args.insert(patch_args.end(), objects.begin(), objects.end());
    auto sections = split_patch_sections(repo.git(patch_args));

    for (size_t i = 0; i < raw_entries.size(); ++i) {
        FileChange change;
        change.path = utf8_lossy(raw_entries[i].new_path);
        change.kind = kind_from_status(raw_entries[i].status);
        if (i < sections.size()) {
            change.diff_text = utf8_lossy(sections[i]);
            parse_hunks(sections[i], change.added_lines, change.deleted_lines);
        }
        rec.changes.push_back(std::move(change));
    }
    return rec;
}

std::vector<CommitRecord> walk_commits(const RepoHandle& repo, const Release& release) {
    std::vector<CommitRecord> records;
    records.reserve(release.commits.size());
    for (const auto& hash : release.commits)
        records.push_back(read_commit(repo, hash));
    return records;
}

std::optional<std::string> file_snapshot(const RepoHandle& repo,
                                         const std::string& commit,
                                         const std::string& path) {
    auto check = run_process(
        {"git", "-C", repo.path().string(), "cat-file", "-e", commit + "^{commit}"});
    if (!check.ok())
        throw MissingObject("commit not found: " + commit);

    auto type = run_process(
        {"git", "-C", repo.path().string(), "cat-file", "-t", commit + ":" + path});
    if (!type.ok() || type.out.rfind("blob", 0) != 0)
        return std::nullopt;
    auto blob = run_process(
        {"git", "-C", repo.path().string(), "cat-file", "blob", commit + ":" + path});
    if (!blob.ok())
        return std::nullopt;
    return utf8_lossy(blob.out);
}

std::vector<std::string> blame_lines(const RepoHandle& repo,
                                     const std::string& commit,
                                     const std::string& path,
                                     const std::vector<int>& lines) {
    if (lines.empty())
        return {};
    std::vector<std::string> args = {"blame", "--porcelain"};
    for (int line : lines) {
        args.push_back("-L");
        args.push_back(std::to_string(line) + "," + std::to_string(line));
    }
    args.push_back(commit);
    args.push_back("--");
    args.push_back(path);

    std::map<int, std::string> by_final_line;
    for (const auto& line : split_lines(repo.git(args))) {
        // Entry headers look like "<sha> <orig_line> <final_line>[ <count>]".
        if (line.size() < 42 || line[40] != ' ')
            continue;
        bool hex = true;
        for (size_t i = 0; i < 40 && hex; ++i)
            hex = std::isxdigit(static_cast<unsigned char>(line[i])) != 0;
        if (!hex)
            continue;
        std::istringstream fields(line.substr(41));
        int orig = 0, fin = 0;
        if (fields >> orig >> fin)
            by_final_line[fin] = line.substr(0, 40);
    }

    std::vector<std::string> result;
    result.reserve(lines.size());
    for (int line : lines) {
        auto it = by_final_line.find(line);
        result.push_back(it == by_final_line.end() ? std::string() : it->second);
    }
    return result;
}

bool is_source_file(const std::string& path) {
    static const std::array<const char*, 6> exts = {".c", ".h", ".cpp",
                                                    ".hpp", ".cc", ".hh"};
    size_t dot = path.rfind('.');
    if (dot == std::string::npos)
        return false;
    std::string ext = lowercase(path.substr(dot));
    return std::find(exts.begin(), exts.end(), ext) != exts.end();
}

} // namespace featforge::repo
