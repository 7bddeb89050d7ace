#pragma once

#include <featforge/context.hpp>

#include <map>
#include <set>
#include <string>
#include <vector>

namespace featforge::metrics {

enum class MetricSet { QueirozMet, ProcMet, ProcStructMet, FileMoser17, FileCombined32 };

MetricSet metric_set_from_string(const std::string& s);
std::string to_string(MetricSet set);

// Stable lowercase attribute ids, in dataset header order.
const std::vector<std::string>& attribute_ids(MetricSet set);

// Sum of added plus deleted lines over the developer's commits in R that
// touch at least one file of A.
long developer_experience(const std::string& dev, const ReleaseContext& ctx,
                          const std::set<std::string>& files);

struct FeatureProcess {
    double fcomm = 0, fadev = 0, fddev = 0, fexp = 0, foexp = 0;
    double fmodd = 0, faddl = 0, freml = 0;
};

// Throws FeatureNotInRelease when the feature is not in ctx.features.
FeatureProcess feature_process_metrics(const std::string& feature,
                                       const ReleaseContext& ctx);

struct FeatureStructure {
    double fnloc = 0, fcyco = 0, lofc = 0, ndep = 0, scat = 0, tanga = 0;
};

FeatureStructure feature_structure_metrics(const std::string& feature,
                                           const ReleaseContext& ctx,
                                           const SnapshotFn& snapshot);

// 1 + decision tokens (if, for, while, case, &&, ||, ?) outside comments,
// strings and preprocessor lines.
long cyclomatic_complexity(const std::string& file_text);

long nonblank_loc(const std::string& file_text);

struct FileProcess {
    double revi = 0, refa = 0, bugf = 0, auth = 0;
    double addl = 0, addm = 0, adda = 0;
    double reml = 0, remm = 0, rema = 0;
    double cchn = 0, cchm = 0, ccha = 0;
    double maxc = 0, avgc = 0;
    double aage = 0, wage = 0; // weeks back from the release end commit
};

FileProcess file_process_metrics(const std::string& path, const ReleaseContext& ctx);

// The 14 feature metrics in attribute_ids(ProcStructMet) order.
std::vector<double> feature_vector(const std::string& feature,
                                   const ReleaseContext& ctx,
                                   const SnapshotFn& snapshot);

// The 17 Moser metrics in attribute_ids(FileMoser17) order.
std::vector<double> file_vector(const std::string& path, const ReleaseContext& ctx);

// Per-metric maximum across the file's features plus fnof; 15 zeros when the
// file has no features.
std::vector<double> max_aggregate_to_file(
    const std::set<std::string>& features_in_file,
    const std::map<std::string, std::vector<double>>& feature_vectors);

} // namespace featforge::metrics
