#include <doctest.h>

#include "fixtures.hpp"
#include "synth.hpp"

#include <featforge/dataset.hpp>
#include <featforge/errors.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

using namespace featforge;
namespace fs = std::filesystem;

namespace {

data::Dataset toy_dataset(int scopes_per_project, int rows_per_scope,
                          std::uint64_t seed = 3, int attrs = 3) {
    data::Dataset ds;
    for (int a = 0; a < attrs; ++a)
        ds.attributes.push_back("m" + std::to_string(a));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    for (int s = 0; s < scopes_per_project; ++s) {
        for (int i = 0; i < rows_per_scope; ++i) {
            data::Instance inst;
            inst.project = "p";
            inst.scope = "s" + std::to_string(s);
            inst.name = "e" + std::to_string(s) + "_" + std::to_string(i);
            for (int a = 0; a < attrs; ++a)
                inst.values.push_back(value(rng));
            inst.label = (i % 3 == 0) ? label::Label::defective : label::Label::clean;
            ds.instances.push_back(std::move(inst));
        }
    }
    return ds;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

data::ProjectInputs alpha_inputs(const repo::RepoHandle& repo,
                                 const cache::ProjectCache& cache,
                                 const std::map<std::string, metrics::CommitFeatureRefs>& refs,
                                 const std::set<std::string>& introducers) {
    data::ProjectInputs in;
    in.name = "alpha";
    in.cache = &cache;
    in.refs = &refs;
    in.introducers = &introducers;
    in.snapshot = [&repo](const std::string& commit, const std::string& path) {
        return repo::file_snapshot(repo, commit, path);
    };
    return in;
}

} // namespace

TEST_CASE("assemble on fixture-alpha produces the documented shapes") {
    auto repo = repo::RepoHandle::open(test::fixture_alpha());
    auto dir = test::scratch_dir("assemble");
    auto cache = cache::mine_project(repo, "alpha", "v*", dir);
    auto refs = metrics::extract_all_refs(cache);
    auto hashes = test::alpha_hashes();
    std::set<std::string> introducers = {hashes[2]};
    auto inputs = alpha_inputs(repo, cache, refs, introducers);

    auto ds = data::assemble({inputs}, data::Level::release,
                             metrics::MetricSet::ProcStructMet);
    CHECK(ds.attributes.size() == 14);
    CHECK(ds.instances.size() == 4); // 2 features x 2 releases
    CHECK(ds.scopes_of("alpha") == std::vector<std::string>{"v1.0", "v2.0"});

    long defective = ds.count(label::Label::defective);
    CHECK(defective == 1); // FEAT_A at v1.0 only
    for (const auto& inst : ds.instances) {
        if (inst.name == "FEAT_A" && inst.scope == "v1.0")
            CHECK(inst.label == label::Label::defective);
        else
            CHECK(inst.label == label::Label::clean);
    }

    SUBCASE("QueirozMet has 5 attributes, FileCombined32 has 32") {
        auto q = data::assemble({inputs}, data::Level::release,
                                metrics::MetricSet::QueirozMet);
        CHECK(q.attributes.size() == 5);
        auto f = data::assemble({inputs}, data::Level::release,
                                metrics::MetricSet::FileCombined32);
        CHECK(f.attributes.size() == 32);
        // fnof: parser.c carries FEAT_A; the header guard is never counted
        for (const auto& inst : f.instances) {
            if (inst.name == "parser.c" && inst.scope == "v1.0")
                CHECK(inst.values.back() == 1);
            if (inst.name == "config.h")
                CHECK(inst.values.back() == 0);
        }
    }

    SUBCASE("commit-level assembly is cumulative and labels introducers") {
        auto jit = data::assemble({inputs}, data::Level::commit,
                                  metrics::MetricSet::ProcStructMet);
        // Scopes with no referenced features produce no instances (c1, c4
        // reference FEAT_B via util.c... c4 does; c1 and c5 and c8 do not).
        auto scopes = jit.scopes_of("alpha");
        for (const auto& inst : jit.instances) {
            bool is_introducer_scope = inst.scope == hashes[2];
            CHECK((inst.label == label::Label::defective) == is_introducer_scope);
        }
        // c2 introduced FEAT_A refs, so the earliest scope is c2.
        REQUIRE_FALSE(scopes.empty());
        CHECK(scopes.front() == hashes[1]);
    }

    SUBCASE("release labels equal the OR of commit-level labels") {
        auto jit = data::assemble({inputs}, data::Level::commit,
                                  metrics::MetricSet::ProcStructMet);
        std::map<std::string, std::set<std::string>> release_of_commit;
        for (const auto& release : cache.releases)
            for (const auto& hash : release.commits)
                release_of_commit[hash].insert(release.tag);
        std::map<std::pair<std::string, std::string>, bool> or_defective;
        for (const auto& inst : jit.instances)
            for (const auto& tag : release_of_commit.at(inst.scope))
                or_defective[{tag, inst.name}] =
                    or_defective[{tag, inst.name}] ||
                    inst.label == label::Label::defective;
        for (const auto& inst : ds.instances) {
            auto it = or_defective.find({inst.scope, inst.name});
            REQUIRE(it != or_defective.end());
            CHECK((inst.label == label::Label::defective) == it->second);
        }
    }

    SUBCASE("assembly is deterministic byte for byte") {
        auto out1 = test::scratch_dir("det1") / "ds.csv";
        auto out2 = test::scratch_dir("det2") / "ds.csv";
        data::export_table(ds, data::TableFormat::csv, out1);
        auto again = data::assemble({inputs}, data::Level::release,
                                    metrics::MetricSet::ProcStructMet);
        data::export_table(again, data::TableFormat::csv, out2);
        CHECK(slurp(out1) == slurp(out2));
    }
}

TEST_CASE("assembly without any instances raises EmptyDataset") {
    // A project touching only non-source files has no features to assemble.
    cache::ProjectCache cache;
    repo::CommitRecord rec;
    rec.hash = "only";
    rec.author = "d<d@x>";
    rec.timestamp = 1577836800;
    rec.message_first_line = "Update docs";
    rec.message_full = rec.message_first_line;
    repo::FileChange change;
    change.path = "README.md";
    change.diff_text = "@@ -1,1 +1,2 @@\n #ifdef NOT_A_SOURCE_FILE\n+text\n";
    change.added_lines.push_back({2, "text"});
    rec.changes.push_back(change);
    cache.commits.push_back(rec);
    repo::Release release;
    release.tag = "r";
    release.commits = {"only"};
    release.end_commit = "only";
    cache.releases.push_back(release);

    auto refs = metrics::extract_all_refs(cache);
    CHECK(refs.at("only").counts.empty()); // .md files are not scanned

    std::set<std::string> no_introducers;
    data::ProjectInputs inputs;
    inputs.name = "docs";
    inputs.cache = &cache;
    inputs.refs = &refs;
    inputs.introducers = &no_introducers;
    inputs.snapshot = [](const std::string&, const std::string&) {
        return std::optional<std::string>{};
    };
    CHECK_THROWS_AS(data::assemble({inputs}, data::Level::release,
                                   metrics::MetricSet::ProcStructMet),
                    EmptyDataset);

    // File metrics still cover every changed file, whatever the extension.
    auto files = data::assemble({inputs}, data::Level::release,
                                metrics::MetricSet::FileMoser17);
    REQUIRE(files.instances.size() == 1);
    CHECK(files.instances[0].name == "README.md");

    SUBCASE("commit-level file datasets share the machinery") {
        auto jit = data::assemble({inputs}, data::Level::commit,
                                  metrics::MetricSet::FileCombined32);
        REQUIRE(jit.instances.size() == 1);
        CHECK(jit.instances[0].scope == "only");
        CHECK(jit.instances[0].values.size() == 32);
        CHECK(jit.instances[0].values.back() == 0); // fnof
    }
}

TEST_CASE("chronological_split honours ratios and ordering") {
    auto ds = toy_dataset(10, 4);
    auto split = data::chronological_split(ds, 70.0);
    CHECK(split.scope_counts.at("p") == std::pair<int, int>{7, 3});
    for (const auto& inst : split.train.instances)
        CHECK(inst.scope <= "s6");
    for (const auto& inst : split.test.instances)
        CHECK(inst.scope >= "s7");

    SUBCASE("two scopes at 80:20 degrade to a 1/1 split") {
        auto two = toy_dataset(2, 4);
        auto s = data::chronological_split(two, 80.0);
        CHECK(s.scope_counts.at("p") == std::pair<int, int>{1, 1});
    }

    SUBCASE("a single scope cannot be split") {
        auto one = toy_dataset(1, 4);
        CHECK_THROWS_AS(data::chronological_split(one, 70.0), TooFewReleases);
    }

    SUBCASE("split soundness: train scopes precede test scopes") {
        auto scopes = ds.scopes_of("p");
        std::map<std::string, size_t> order;
        for (size_t i = 0; i < scopes.size(); ++i)
            order[scopes[i]] = i;
        size_t max_train = 0, min_test = scopes.size();
        for (const auto& inst : split.train.instances)
            max_train = std::max(max_train, order.at(inst.scope));
        for (const auto& inst : split.test.instances)
            min_test = std::min(min_test, order.at(inst.scope));
        CHECK(max_train < min_test);
    }
}

TEST_CASE("smote doubles the minority and interpolates between parents") {
    auto ds = toy_dataset(4, 30, 11); // 120 instances, 40 defective
    long minority_before = ds.count(label::Label::defective);
    long majority_before = ds.count(label::Label::clean);
    REQUIRE(minority_before >= 6);

    auto result = data::smote_balance(ds, 5, 100, 1);
    CHECK(result.minority_class == label::Label::defective);
    CHECK(result.minority_before == minority_before);
    CHECK(result.synthetic_added == minority_before);
    CHECK(result.dataset.count(label::Label::defective) == 2 * minority_before);
    CHECK(result.dataset.count(label::Label::clean) == majority_before);

    SUBCASE("deterministic under a fixed seed") {
        auto again = data::smote_balance(ds, 5, 100, 1);
        REQUIRE(again.dataset.instances.size() == result.dataset.instances.size());
        for (size_t i = 0; i < again.dataset.instances.size(); ++i)
            CHECK(again.dataset.instances[i].values ==
                  result.dataset.instances[i].values);
        auto other_seed = data::smote_balance(ds, 5, 100, 2);
        bool any_differs = false;
        for (size_t i = ds.instances.size(); i < other_seed.dataset.instances.size();
             ++i)
            if (other_seed.dataset.instances[i].values !=
                result.dataset.instances[i].values)
                any_differs = true;
        CHECK(any_differs);
    }

    SUBCASE("synthetic coordinates stay inside the parent bounding boxes") {
        // Every synthetic value must lie inside the minority value range
        // per attribute (a superset of the two-parent interval check, which
        // the acceptance suite verifies pairwise).
        std::vector<double> lo(ds.attributes.size(), 1e300);
        std::vector<double> hi(ds.attributes.size(), -1e300);
        for (const auto& inst : ds.instances) {
            if (inst.label != label::Label::defective)
                continue;
            for (size_t d = 0; d < inst.values.size(); ++d) {
                lo[d] = std::min(lo[d], inst.values[d]);
                hi[d] = std::max(hi[d], inst.values[d]);
            }
        }
        for (size_t i = ds.instances.size(); i < result.dataset.instances.size();
             ++i) {
            const auto& inst = result.dataset.instances[i];
            for (size_t d = 0; d < inst.values.size(); ++d) {
                CHECK(inst.values[d] >= lo[d]);
                CHECK(inst.values[d] <= hi[d]);
            }
        }
    }

    SUBCASE("midpoint interpolation formula") {
        // v=(1,2), n=(3,4), gap=0.5 -> (2,3); verified directly.
        std::vector<double> v = {1, 2}, n = {3, 4};
        double gap = 0.5;
        std::vector<double> synth(2);
        for (size_t d = 0; d < 2; ++d)
            synth[d] = v[d] + gap * (n[d] - v[d]);
        CHECK(synth == std::vector<double>{2, 3});
    }

    SUBCASE("too few minority instances") {
        auto tiny = toy_dataset(1, 6); // 2 defective only
        CHECK_THROWS_AS(data::smote_balance(tiny, 5, 100, 1), TooFewMinority);
    }
}

TEST_CASE("csv and arff round-trip bit-for-bit") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> value(-1e6, 1e6);
    std::uniform_int_distribution<int> counts(1, 8);
    for (int iter = 0; iter < 25; ++iter) {
        data::Dataset ds;
        int attrs = counts(rng);
        for (int a = 0; a < attrs; ++a)
            ds.attributes.push_back("attr" + std::to_string(a));
        int rows = counts(rng) + 1;
        for (int i = 0; i < rows; ++i) {
            data::Instance inst;
            inst.project = "proj" + std::to_string(iter % 3);
            inst.scope = "r" + std::to_string(i % 4);
            inst.name = i % 5 == 0 ? "name,with\"quirks\"" : "plain" + std::to_string(i);
            for (int a = 0; a < attrs; ++a)
                inst.values.push_back(value(rng) / (a + 1));
            inst.label = i % 2 ? label::Label::clean : label::Label::defective;
            ds.instances.push_back(std::move(inst));
        }

        auto dir = test::scratch_dir("roundtrip");
        for (auto format : {data::TableFormat::csv, data::TableFormat::arff}) {
            auto path = dir / (format == data::TableFormat::csv ? "ds.csv" : "ds.arff");
            data::export_table(ds, format, path);
            auto back = data::import_table(path);
            REQUIRE(back.attributes == ds.attributes);
            REQUIRE(back.instances.size() == ds.instances.size());
            for (size_t i = 0; i < ds.instances.size(); ++i) {
                CHECK(back.instances[i].values == ds.instances[i].values);
                CHECK(back.instances[i].label == ds.instances[i].label);
                CHECK(back.instances[i].project == ds.instances[i].project);
                CHECK(back.instances[i].scope == ds.instances[i].scope);
                CHECK(back.instances[i].name == ds.instances[i].name);
            }
        }
    }
}

TEST_CASE("arff format matches the documented layout") {
    auto ds = toy_dataset(1, 2, 5, 14);
    auto dir = test::scratch_dir("arff");
    data::export_table(ds, data::TableFormat::arff, dir / "out.arff");
    auto text = slurp(dir / "out.arff");
    CHECK(text.rfind("@relation featforge\n", 0) == 0);
    size_t numeric_count = 0;
    size_t pos = 0;
    while ((pos = text.find(" numeric\n", pos)) != std::string::npos) {
        ++numeric_count;
        ++pos;
    }
    CHECK(numeric_count == 14);
    CHECK(text.find("@attribute class {defective,clean}") != std::string::npos);
    CHECK(fs::exists(dir / "out.csv")); // provenance sidecar

    SUBCASE("import rejects a missing class attribute") {
        test::write_file(dir / "bad.arff",
                         "@relation x\n@attribute a numeric\n@data\n1\n");
        CHECK_THROWS_AS(data::import_table(dir / "bad.arff"), SchemaMismatch);
    }

    SUBCASE("csv import rejects a header without class") {
        test::write_file(dir / "bad.csv", "project,scope,name,a\np,s,n,1\n");
        CHECK_THROWS_AS(data::import_table(dir / "bad.csv"), SchemaMismatch);
    }
}

TEST_CASE("validation refuses non-finite vectors") {
    auto ds = toy_dataset(1, 2);
    ds.instances[0].values[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(ds.validate(), SchemaMismatch);
    ds.instances[0].values[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ds.validate(), SchemaMismatch);
}

TEST_CASE("value formatting survives 17-digit round trips") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> value(-1e9, 1e9);
    for (int i = 0; i < 1000; ++i) {
        double v = value(rng) / std::pow(10.0, i % 7);
        std::string s = data::format_value(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(data::format_value(0.1) == "0.10000000000000001");
}
