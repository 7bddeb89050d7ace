#pragma once

#include <featforge/bug_label.hpp>
#include <featforge/cache.hpp>
#include <featforge/metrics.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace featforge::data {

struct Instance {
    std::string project;
    std::string scope; // release tag or commit hash
    std::string name;  // feature name or file path
    std::vector<double> values;
    label::Label label = label::Label::clean;
};

struct Dataset {
    std::vector<std::string> attributes;
    std::vector<Instance> instances;

    void validate() const; // vector lengths and finiteness
    std::vector<std::string> projects() const;
    // Scopes in first-appearance order, which assembly keeps chronological.
    std::vector<std::string> scopes_of(const std::string& project) const;
    long count(label::Label label) const;

    Dataset with_attributes(const std::vector<std::string>& subset) const;
};

enum class Level { release, commit };

Level level_from_string(const std::string& s);
std::string to_string(Level level);

// Everything assembly needs for one mined project.
struct ProjectInputs {
    std::string name;
    const cache::ProjectCache* cache = nullptr;
    const std::map<std::string, metrics::CommitFeatureRefs>* refs = nullptr;
    const std::set<std::string>* introducers = nullptr;
    std::function<std::optional<std::string>(const std::string& commit,
                                             const std::string& path)>
        snapshot;
};

// One instance per (feature or file, scope). Commit-level metrics are
// cumulative up to and including the scope commit. Throws EmptyDataset.
Dataset assemble(const std::vector<ProjectInputs>& projects, Level level,
                 metrics::MetricSet metric_set);

struct SplitResult {
    Dataset train;
    Dataset test;
    // project -> (train scope count, test scope count)
    std::map<std::string, std::pair<int, int>> scope_counts;
};

// Earliest releases to train, per project; k = round(ratio * n) clamped to
// [1, n-1]. Throws TooFewReleases when a project has fewer than two scopes.
SplitResult chronological_split(const Dataset& ds, double target_ratio_percent);

struct SmoteResult {
    Dataset dataset;
    label::Label minority_class = label::Label::defective;
    long minority_before = 0;
    long synthetic_added = 0;
    long majority = 0;
};

// Adds percent/100 * |minority| synthetic minority instances, each a convex
// combination of an instance and one of its k nearest minority neighbours
// (Euclidean on min-max-scaled attributes). Throws TooFewMinority.
SmoteResult smote_balance(const Dataset& train, int k = 5, int percent = 100,
                          std::uint64_t seed = 1);

enum class TableFormat { csv, arff };

TableFormat format_from_string(const std::string& s);

// CSV carries project,scope,name before the metrics; ARFF carries metrics +
// class only and writes a sidecar CSV (same stem, .csv) for provenance.
void export_table(const Dataset& ds, TableFormat format,
                  const std::filesystem::path& path);
Dataset import_table(const std::filesystem::path& path);

// 17-significant-digit decimal form that round-trips doubles exactly.
std::string format_value(double v);

} // namespace featforge::data
