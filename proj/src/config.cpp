#include <featforge/config.hpp>

#include <featforge/errors.hpp>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace featforge::cli {

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file: " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid config JSON: " + std::string(e.what()));
    }

    Config config;
    if (doc.contains("cache_dir"))
        config.cache_dir = doc["cache_dir"].get<std::string>();
    if (doc.contains("seed"))
        config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("jobs"))
        config.jobs = doc["jobs"].get<int>();
    if (doc.contains("keywords"))
        config.keywords = doc["keywords"].get<std::vector<std::string>>();

    if (!doc.contains("projects") || !doc["projects"].is_array() ||
        doc["projects"].empty())
        throw ConfigError("config needs a non-empty projects array");

    std::set<std::string> names;
    for (const auto& pj : doc["projects"]) {
        ProjectEntry entry;
        entry.name = pj.at("name").get<std::string>();
        entry.repo = pj.at("repo").get<std::string>();
        if (pj.contains("tags"))
            entry.tags = pj["tags"].get<std::string>();
        if (pj.contains("split"))
            entry.split = pj["split"].get<double>();
        if (!names.insert(entry.name).second)
            throw ConfigError("duplicate project name: " + entry.name);
        if (!(entry.split > 0.0 && entry.split < 100.0))
            throw ConfigError("split ratio must be in (0,100) for " + entry.name);
        config.projects.push_back(std::move(entry));
    }

    if (const char* env = std::getenv("FEATFORGE_CACHE"))
        config.cache_dir = env;
    return config;
}

} // namespace featforge::cli
