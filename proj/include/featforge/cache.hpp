#pragma once

#include <featforge/repo.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace featforge::cache {

nlohmann::json commit_to_json(const repo::CommitRecord& rec);
repo::CommitRecord commit_from_json(const nlohmann::json& j);

// One JSON object per line, one line per commit, UTF-8.
void save_commits(const std::filesystem::path& file,
                  const std::vector<repo::CommitRecord>& records);
std::vector<repo::CommitRecord> load_commits(const std::filesystem::path& file);

void save_releases(const std::filesystem::path& file,
                   const std::vector<repo::Release>& releases);
std::vector<repo::Release> load_releases(const std::filesystem::path& file);

struct ProjectCache {
    std::vector<repo::Release> releases;
    std::vector<repo::CommitRecord> commits; // all releases, chronological

    const repo::CommitRecord* find(const std::string& hash) const;
};

std::filesystem::path commits_path(const std::filesystem::path& dir,
                                   const std::string& project);
std::filesystem::path releases_path(const std::filesystem::path& dir,
                                    const std::string& project);

// Mines the repository into the cache directory unless an up-to-date cache
// already exists (same releases and commit lists). Returns the loaded cache.
ProjectCache mine_project(const repo::RepoHandle& repo, const std::string& project,
                          const std::string& tag_filter,
                          const std::filesystem::path& cache_dir);

ProjectCache load_project(const std::string& project,
                          const std::filesystem::path& cache_dir);

} // namespace featforge::cache
