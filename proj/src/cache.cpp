#include <featforge/cache.hpp>

#include <featforge/errors.hpp>

#include <fstream>
#include <sstream>

namespace featforge::cache {

using nlohmann::json;

json commit_to_json(const repo::CommitRecord& rec) {
    json changes = json::array();
    for (const auto& c : rec.changes) {
        json added = json::array();
        for (const auto& l : c.added_lines)
            added.push_back(json::array({l.line, l.text}));
        json deleted = json::array();
        for (const auto& l : c.deleted_lines)
            deleted.push_back(json::array({l.line, l.text}));
        changes.push_back({{"path", c.path},
                           {"kind", repo::to_string(c.kind)},
                           {"added_lines", std::move(added)},
                           {"deleted_lines", std::move(deleted)},
                           {"diff_text", c.diff_text}});
    }
    return json{{"hash", rec.hash},
                {"parent_hashes", rec.parent_hashes},
                {"author", rec.author},
                {"timestamp", rec.timestamp},
                {"message_first_line", rec.message_first_line},
                {"message_full", rec.message_full},
                {"changes", std::move(changes)}};
}

repo::CommitRecord commit_from_json(const json& j) {
    repo::CommitRecord rec;
    rec.hash = j.at("hash").get<std::string>();
    rec.parent_hashes = j.at("parent_hashes").get<std::vector<std::string>>();
    rec.author = j.at("author").get<std::string>();
    rec.timestamp = j.at("timestamp").get<std::int64_t>();
    rec.message_first_line = j.at("message_first_line").get<std::string>();
    rec.message_full = j.at("message_full").get<std::string>();
    for (const auto& cj : j.at("changes")) {
        repo::FileChange c;
        c.path = cj.at("path").get<std::string>();
        c.kind = repo::change_kind_from_string(cj.at("kind").get<std::string>());
        for (const auto& l : cj.at("added_lines"))
            c.added_lines.push_back({l.at(0).get<int>(), l.at(1).get<std::string>()});
        for (const auto& l : cj.at("deleted_lines"))
            c.deleted_lines.push_back({l.at(0).get<int>(), l.at(1).get<std::string>()});
        c.diff_text = cj.at("diff_text").get<std::string>();
        rec.changes.push_back(std::move(c));
    }
    return rec;
}

void save_commits(const std::filesystem::path& file,
                  const std::vector<repo::CommitRecord>& records) {
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + file.string());
    for (const auto& rec : records)
        out << commit_to_json(rec).dump() << "\n";
}

std::vector<repo::CommitRecord> load_commits(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + file.string());
    std::vector<repo::CommitRecord> records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        records.push_back(commit_from_json(json::parse(line)));
    }
    return records;
}

void save_releases(const std::filesystem::path& file,
                   const std::vector<repo::Release>& releases) {
    json arr = json::array();
    for (const auto& r : releases)
        arr.push_back({{"tag", r.tag},
                       {"index", r.index},
                       {"end_commit", r.end_commit},
                       {"commits", r.commits}});
    std::ofstream out(file, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + file.string());
    out << json{{"releases", std::move(arr)}}.dump(2) << "\n";
}

std::vector<repo::Release> load_releases(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + file.string());
    std::stringstream buf;
    buf << in.rdbuf();
    json doc = json::parse(buf.str());
    std::vector<repo::Release> releases;
    for (const auto& rj : doc.at("releases")) {
        repo::Release r;
        r.tag = rj.at("tag").get<std::string>();
        r.index = rj.at("index").get<int>();
        r.end_commit = rj.at("end_commit").get<std::string>();
        r.commits = rj.at("commits").get<std::vector<std::string>>();
        releases.push_back(std::move(r));
    }
    return releases;
}

const repo::CommitRecord* ProjectCache::find(const std::string& hash) const {
    for (const auto& rec : commits)
        if (rec.hash == hash)
            return &rec;
    return nullptr;
}

std::filesystem::path commits_path(const std::filesystem::path& dir,
                                   const std::string& project) {
    return dir / (project + ".jsonl");
}

std::filesystem::path releases_path(const std::filesystem::path& dir,
                                    const std::string& project) {
    return dir / (project + ".releases.json");
}

namespace {

bool same_releases(const std::vector<repo::Release>& a,
                   const std::vector<repo::Release>& b) {
    if (a.size() != b.size())
        return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i].tag != b[i].tag || a[i].end_commit != b[i].end_commit ||
            a[i].commits != b[i].commits)
            return false;
    }
    return true;
}

} // namespace

ProjectCache mine_project(const repo::RepoHandle& repo, const std::string& project,
                          const std::string& tag_filter,
                          const std::filesystem::path& cache_dir) {
    std::filesystem::create_directories(cache_dir);
    auto releases = repo::resolve_releases(repo, tag_filter);

    auto rel_file = releases_path(cache_dir, project);
    auto commit_file = commits_path(cache_dir, project);
    if (std::filesystem::exists(rel_file) && std::filesystem::exists(commit_file)) {
        auto cached = load_releases(rel_file);
        if (same_releases(cached, releases)) {
            ProjectCache cache;
            cache.releases = std::move(cached);
            cache.commits = load_commits(commit_file);
            return cache;
        }
    }

    ProjectCache cache;
    cache.releases = releases;
    for (const auto& release : releases) {
        auto records = repo::walk_commits(repo, release);
        for (auto& rec : records)
            cache.commits.push_back(std::move(rec));
    }
    save_releases(rel_file, cache.releases);
    save_commits(commit_file, cache.commits);
    return cache;
}

ProjectCache load_project(const std::string& project,
                          const std::filesystem::path& cache_dir) {
    ProjectCache cache;
    cache.releases = load_releases(releases_path(cache_dir, project));
    cache.commits = load_commits(commits_path(cache_dir, project));
    return cache;
}

} // namespace featforge::cache
