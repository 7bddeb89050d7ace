#pragma once

#include <featforge/cache.hpp>
#include <featforge/context.hpp>
#include <featforge/scenario.hpp>

#include <cstdint>
#include <memory>
#include <set>
#include <string>

namespace featforge::test {

// A fabricated project (no git involved): commit records with coherent
// diffs, per-commit refs, a bug-introducer set correlated with churn, and a
// deterministic snapshot function. Used by the scenario tests, which need
// corpora large enough for SMOTE and ReliefF.
struct SynthProject {
    std::string name;
    cache::ProjectCache cache;
    std::map<std::string, metrics::CommitFeatureRefs> refs;
    std::set<std::string> introducers;

    scenario::ScenarioProject to_scenario(double split_ratio = 70.0) const;
};

std::shared_ptr<SynthProject> make_synth_project(const std::string& name,
                                                 int releases,
                                                 int commits_per_release,
                                                 int features, int files,
                                                 std::uint64_t seed);

// Three medium projects under one seed; held alive by the returned vector.
std::vector<std::shared_ptr<SynthProject>> synth_corpus(std::uint64_t seed = 7);

std::string synth_snapshot_text(const std::string& path, int features, int files);

} // namespace featforge::test
