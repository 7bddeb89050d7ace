#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace featforge::cli {

struct ProjectEntry {
    std::string name;
    std::filesystem::path repo;
    std::string tags = "*";
    double split = 70.0; // train percentage
};

struct Config {
    std::vector<ProjectEntry> projects;
    std::filesystem::path cache_dir = "cache";
    std::uint64_t seed = 1;
    std::vector<std::string> keywords; // empty -> built-in corrective list
    int jobs = 0;                      // 0 -> hardware concurrency
};

// Throws ConfigError on duplicate names or ratios outside (0,100).
// FEATFORGE_CACHE overrides cache_dir.
Config load_config(const std::filesystem::path& path);

} // namespace featforge::cli
