#pragma once

#include <featforge/dataset.hpp>
#include <featforge/eval.hpp>
#include <featforge/learn.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace featforge::scenario {

// One mined project plus everything assembly and labeling produced for it.
struct ScenarioProject {
    std::string name;
    double split_ratio = 70.0;
    const cache::ProjectCache* cache = nullptr;
    std::map<std::string, metrics::CommitFeatureRefs> refs;
    std::set<std::string> introducers;
    std::function<std::optional<std::string>(const std::string& commit,
                                             const std::string& path)>
        snapshot;

    data::ProjectInputs inputs() const;
};

struct Cell {
    std::string name; // unique within the scenario, used for file names
    std::vector<std::pair<std::string, std::string>> key;
    std::optional<eval::EvalReport> report;
    std::vector<std::string> flags;
    nlohmann::json extra = nullptr; // scenario-specific payload (e.g. mappings)
};

struct ScenarioResult {
    std::string id;
    std::vector<Cell> cells;
    std::vector<std::vector<std::string>> summary; // header row first
    // Optional second table (rq5's train-project x test-project AUC matrix
    // for k=1), written as heatmap.csv when non-empty.
    std::vector<std::vector<std::string>> heatmap;

    // Writes summary.csv, cells/<name>.json and roc/<name>.csv.
    void write(const std::filesystem::path& dir) const;
};

struct Options {
    std::uint64_t seed = 1;
    int jobs = 1;
    int smote_k = 5;
    int smote_percent = 100;
};

// Splits each project by its own target ratio, earliest scopes to train.
data::SplitResult split_by_project(const data::Dataset& ds,
                                   const std::vector<ScenarioProject>& projects);

// 7 classifiers x 3 feature metric sets on the pooled release-level corpus.
ScenarioResult rq1_grid(const std::vector<ScenarioProject>& projects,
                        const Options& options);

// Random forest on file datasets: all/top-75%/top-50% of 17 and 32 metrics.
ScenarioResult rq2_file_level(const std::vector<ScenarioProject>& projects,
                              const Options& options);

// Feature predictions joined onto the files implementing each feature.
ScenarioResult rq3_compare(const std::vector<ScenarioProject>& projects,
                           const Options& options);

// Train on scopes 1..n, test scope n+1, per project.
ScenarioResult rq4_incremental(const ScenarioProject& project, data::Level level,
                               const Options& options);

// All C(P,k) training combos, evaluated on each excluded project.
ScenarioResult rq5_cross_project(const std::vector<ScenarioProject>& projects,
                                 data::Level level, const Options& options);

} // namespace featforge::scenario
