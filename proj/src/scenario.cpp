#include <featforge/scenario.hpp>

#include <featforge/errors.hpp>
#include <featforge/parallel.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace featforge::scenario {

namespace {

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
            c == '.')
            out += c;
        else
            out += '-';
    }
    return out;
}

std::string csv_field(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += "\"\"";
        else
            out += c;
    }
    return out + "\"";
}

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

void summary_report_rows(ScenarioResult& result, const std::string& classifier,
                         const std::string& metric_set, const eval::EvalReport& report) {
    auto row = [&](const std::string& cls, const eval::Prf& p) {
        result.summary.push_back({classifier, metric_set, cls, fmt(p.precision),
                                  fmt(p.recall), fmt(p.f), fmt(report.auc)});
    };
    row("defective", report.per_class.at("defective"));
    row("clean", report.per_class.at("clean"));
    row("w.a.", report.weighted);
}

const std::vector<metrics::MetricSet>& feature_sets() {
    static const std::vector<metrics::MetricSet> sets = {
        metrics::MetricSet::QueirozMet, metrics::MetricSet::ProcMet,
        metrics::MetricSet::ProcStructMet};
    return sets;
}

bool single_class(const data::Dataset& ds) {
    return ds.count(label::Label::defective) == 0 ||
           ds.count(label::Label::clean) == 0;
}

data::Dataset instances_for_scopes(const data::Dataset& ds,
                                   const std::set<std::string>& scopes) {
    data::Dataset out;
    out.attributes = ds.attributes;
    for (const auto& inst : ds.instances)
        if (scopes.count(inst.scope))
            out.instances.push_back(inst);
    return out;
}

std::vector<std::vector<size_t>> combinations(size_t n, size_t k) {
    std::vector<std::vector<size_t>> all;
    std::vector<size_t> combo(k);
    std::iota(combo.begin(), combo.end(), 0);
    while (true) {
        all.push_back(combo);
        size_t i = k;
        while (i-- > 0) {
            if (combo[i] + (k - i) < n) {
                ++combo[i];
                for (size_t j = i + 1; j < k; ++j)
                    combo[j] = combo[j - 1] + 1;
                break;
            }
            if (i == 0)
                return all;
        }
    }
}

} // namespace

data::ProjectInputs ScenarioProject::inputs() const {
    data::ProjectInputs in;
    in.name = name;
    in.cache = cache;
    in.refs = &refs;
    in.introducers = &introducers;
    in.snapshot = snapshot;
    return in;
}

void ScenarioResult::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir / "cells");
    std::filesystem::create_directories(dir / "roc");

    auto write_table = [&](const std::filesystem::path& path,
                           const std::vector<std::vector<std::string>>& rows) {
        std::ofstream out(path, std::ios::binary);
        if (!out)
            throw IoError("cannot write " + path.string());
        for (const auto& row : rows) {
            for (size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << csv_field(row[i]);
            out << "\n";
        }
    };
    write_table(dir / "summary.csv", summary);
    if (!heatmap.empty())
        write_table(dir / "heatmap.csv", heatmap);

    for (const auto& cell : cells) {
        nlohmann::json key = nlohmann::json::object();
        for (const auto& [k, v] : cell.key)
            key[k] = v;
        nlohmann::json j{{"scenario", id},
                         {"key", std::move(key)},
                         {"flags", cell.flags},
                         {"extra", cell.extra},
                         {"report", cell.report ? cell.report->to_json()
                                                : nlohmann::json(nullptr)}};
        std::ofstream cell_out(dir / "cells" / (cell.name + ".json"), std::ios::binary);
        cell_out << j.dump(2) << "\n";
        if (cell.report && !cell.report->roc.empty()) {
            std::ofstream roc_out(dir / "roc" / (cell.name + ".csv"), std::ios::binary);
            roc_out << cell.report->roc_csv();
        }
    }
}

data::SplitResult split_by_project(const data::Dataset& ds,
                                   const std::vector<ScenarioProject>& projects) {
    data::SplitResult result;
    result.train.attributes = ds.attributes;
    result.test.attributes = ds.attributes;

    std::map<std::string, std::set<std::string>> train_scopes;
    for (const auto& project : projects) {
        auto scopes = ds.scopes_of(project.name);
        int n = static_cast<int>(scopes.size());
        if (n < 2)
            throw TooFewReleases("project " + project.name + " has " +
                                 std::to_string(n) + " scope(s)");
        int k = static_cast<int>(std::llround(project.split_ratio / 100.0 * n));
        k = std::clamp(k, 1, n - 1);
        for (int i = 0; i < k; ++i)
            train_scopes[project.name].insert(scopes[static_cast<size_t>(i)]);
        result.scope_counts[project.name] = {k, n - k};
    }
    for (const auto& inst : ds.instances) {
        if (train_scopes[inst.project].count(inst.scope))
            result.train.instances.push_back(inst);
        else
            result.test.instances.push_back(inst);
    }
    return result;
}

ScenarioResult rq1_grid(const std::vector<ScenarioProject>& projects,
                        const Options& options) {
    ScenarioResult result;
    result.id = "rq1";
    result.summary.push_back({"classifier", "metric_set", "class", "precision",
                              "recall", "f", "auc"});

    std::vector<data::ProjectInputs> inputs;
    for (const auto& p : projects)
        inputs.push_back(p.inputs());

    struct Prepared {
        metrics::MetricSet set;
        data::Dataset train;
        data::Dataset test;
    };
    std::vector<Prepared> prepared;
    for (auto set : feature_sets()) {
        auto ds = data::assemble(inputs, data::Level::release, set);
        auto split = split_by_project(ds, projects);
        auto balanced = data::smote_balance(split.train, options.smote_k,
                                            options.smote_percent, options.seed);
        prepared.push_back({set, std::move(balanced.dataset), std::move(split.test)});
    }

    const auto& kinds = learn::all_kinds();
    size_t cell_count = prepared.size() * kinds.size();
    std::vector<Cell> cells(cell_count);
    parallel_for(cell_count, options.jobs, [&](size_t i) {
        const auto& prep = prepared[i / kinds.size()];
        auto kind = kinds[i % kinds.size()];
        auto spec = learn::make_spec(kind, options.seed);
        auto model = learn::train(spec, prep.train);
        auto report = eval::evaluate(model, prep.test);

        Cell cell;
        cell.name = sanitize("rq1_" + learn::to_string(kind) + "_" +
                             metrics::to_string(prep.set));
        cell.key = {{"classifier", learn::to_string(kind)},
                    {"metric_set", metrics::to_string(prep.set)}};
        cell.report = std::move(report);
        cells[i] = std::move(cell);
    });

    for (auto& cell : cells) {
        summary_report_rows(result, cell.key[0].second, cell.key[1].second,
                            *cell.report);
        result.cells.push_back(std::move(cell));
    }
    return result;
}

ScenarioResult rq2_file_level(const std::vector<ScenarioProject>& projects,
                              const Options& options) {
    ScenarioResult result;
    result.id = "rq2";
    result.summary.push_back({"dataset", "variant", "attributes", "auc"});

    std::vector<data::ProjectInputs> inputs;
    for (const auto& p : projects)
        inputs.push_back(p.inputs());

    struct Variant {
        std::string dataset;
        std::string variant;
        data::Dataset train;
        data::Dataset test;
    };
    std::vector<Variant> variants;
    for (auto set : {metrics::MetricSet::FileMoser17, metrics::MetricSet::FileCombined32}) {
        auto ds = data::assemble(inputs, data::Level::release, set);
        auto split = split_by_project(ds, projects);
        auto balanced = data::smote_balance(split.train, options.smote_k,
                                            options.smote_percent, options.seed)
                            .dataset;
        auto ranked = eval::relieff_rank(balanced, 10, options.seed);
        std::string base = set == metrics::MetricSet::FileMoser17 ? "file17" : "file32";
        variants.push_back({base, "all", balanced, split.test});
        for (double frac : {0.75, 0.50}) {
            auto subset = eval::top_fraction(ranked, frac);
            std::string tag = frac == 0.75 ? "top75" : "top50";
            variants.push_back({base, tag, balanced.with_attributes(subset),
                                split.test.with_attributes(subset)});
        }
    }

    std::vector<Cell> cells(variants.size());
    parallel_for(variants.size(), options.jobs, [&](size_t i) {
        const auto& v = variants[i];
        auto spec = learn::make_spec(learn::ClassifierKind::forest, options.seed);
        auto model = learn::train(spec, v.train);
        Cell cell;
        cell.name = sanitize("rq2_" + v.dataset + "_" + v.variant);
        cell.key = {{"dataset", v.dataset},
                    {"variant", v.variant},
                    {"attributes", std::to_string(v.train.attributes.size())}};
        cell.report = eval::evaluate(model, v.test);
        cells[i] = std::move(cell);
    });

    for (auto& cell : cells) {
        result.summary.push_back({cell.key[0].second, cell.key[1].second,
                                  cell.key[2].second, fmt(cell.report->auc)});
        result.cells.push_back(std::move(cell));
    }
    return result;
}

ScenarioResult rq3_compare(const std::vector<ScenarioProject>& projects,
                           const Options& options) {
    ScenarioResult result;
    result.id = "rq3";

    std::vector<data::ProjectInputs> inputs;
    for (const auto& p : projects)
        inputs.push_back(p.inputs());

    auto feature_ds =
        data::assemble(inputs, data::Level::release, metrics::MetricSet::ProcStructMet);
    auto file_ds =
        data::assemble(inputs, data::Level::release, metrics::MetricSet::FileCombined32);

    // Split both sides on the same release boundaries. The file dataset sees
    // every release with changes, so its scope list drives the split and the
    // feature instances follow it.
    auto file_split = split_by_project(file_ds, projects);
    std::set<std::string> test_keys;
    for (const auto& inst : file_split.test.instances)
        test_keys.insert(inst.project + "\x1f" + inst.scope);
    data::SplitResult feature_split;
    feature_split.train.attributes = feature_ds.attributes;
    feature_split.test.attributes = feature_ds.attributes;
    for (const auto& inst : feature_ds.instances) {
        if (test_keys.count(inst.project + "\x1f" + inst.scope))
            feature_split.test.instances.push_back(inst);
        else
            feature_split.train.instances.push_back(inst);
    }

    auto spec = learn::make_spec(learn::ClassifierKind::forest, options.seed);

    auto feature_train = data::smote_balance(feature_split.train, options.smote_k,
                                             options.smote_percent, options.seed)
                             .dataset;
    auto feature_model = learn::train(spec, feature_train);
    auto feature_report = eval::evaluate(feature_model, feature_split.test);

    auto file_train = data::smote_balance(file_split.train, options.smote_k,
                                          options.smote_percent, options.seed)
                          .dataset;
    auto file_subset = eval::top_fraction(eval::relieff_rank(file_train, 10, options.seed), 0.75);
    auto file_model = learn::train(spec, file_train.with_attributes(file_subset));
    auto file_test = file_split.test.with_attributes(file_subset);
    auto file_report = eval::evaluate(file_model, file_test);

    // Predictions keyed by (project, scope, name).
    auto key_of = [](const data::Instance& inst) {
        return inst.project + "\x1f" + inst.scope + "\x1f" + inst.name;
    };
    std::map<std::string, std::pair<label::Label, label::Label>> feature_pred;
    for (const auto& inst : feature_split.test.instances)
        feature_pred[key_of(inst)] = {inst.label,
                                      feature_model.predict(inst.values)};
    std::map<std::string, std::pair<label::Label, label::Label>> file_pred;
    for (const auto& inst : file_test.instances)
        file_pred[key_of(inst)] = {inst.label, file_model.predict(inst.values)};

    nlohmann::json mapping = nlohmann::json::array();
    struct Tally {
        long defective_features = 0;
        long predicted_features = 0;
        long defective_file_mappings = 0;
        long predicted_file_mappings = 0;
    };
    std::map<std::pair<std::string, std::string>, Tally> tallies;

    for (const auto& project : projects) {
        for (size_t r = 0; r < project.cache->releases.size(); ++r) {
            const auto& release = project.cache->releases[r];
            auto ctx = metrics::build_release_context(*project.cache,
                                                      static_cast<int>(r), project.refs);
            for (const auto& feat : ctx.features) {
                auto fk = project.name + "\x1f" + release.tag + "\x1f" + feat;
                auto fit = feature_pred.find(fk);
                if (fit == feature_pred.end())
                    continue; // training scope
                bool feat_defective = fit->second.first == label::Label::defective;
                bool feat_hit = feat_defective &&
                                fit->second.second == label::Label::defective;
                if (feat_defective) {
                    auto& tally = tallies[{project.name, release.tag}];
                    ++tally.defective_features;
                    if (feat_hit)
                        ++tally.predicted_features;
                }
                for (const auto& path : ctx.files_of.at(feat)) {
                    auto pk = project.name + "\x1f" + release.tag + "\x1f" + path;
                    auto pit = file_pred.find(pk);
                    if (pit == file_pred.end())
                        throw UnmappedFeature("file " + path + " of feature " + feat +
                                              " missing from file test set at " +
                                              release.tag);
                    mapping.push_back(
                        {{"project", project.name},
                         {"release", release.tag},
                         {"feature", feat},
                         {"feature_label", label::to_string(fit->second.first)},
                         {"feature_predicted", label::to_string(fit->second.second)},
                         {"file", path},
                         {"file_label", label::to_string(pit->second.first)},
                         {"file_predicted", label::to_string(pit->second.second)}});
                    if (feat_defective &&
                        pit->second.first == label::Label::defective) {
                        auto& tally = tallies[{project.name, release.tag}];
                        ++tally.defective_file_mappings;
                        if (pit->second.second == label::Label::defective)
                            ++tally.predicted_file_mappings;
                    }
                }
            }
        }
    }

    result.summary.push_back({"project", "release", "defective_features",
                              "predicted_features", "defective_file_mappings",
                              "predicted_file_mappings"});
    Tally grand;
    for (const auto& [key, tally] : tallies) {
        result.summary.push_back({key.first, key.second,
                                  std::to_string(tally.defective_features),
                                  std::to_string(tally.predicted_features),
                                  std::to_string(tally.defective_file_mappings),
                                  std::to_string(tally.predicted_file_mappings)});
        grand.defective_features += tally.defective_features;
        grand.predicted_features += tally.predicted_features;
        grand.defective_file_mappings += tally.defective_file_mappings;
        grand.predicted_file_mappings += tally.predicted_file_mappings;
    }
    result.summary.push_back({"total", "", std::to_string(grand.defective_features),
                              std::to_string(grand.predicted_features),
                              std::to_string(grand.defective_file_mappings),
                              std::to_string(grand.predicted_file_mappings)});

    Cell feature_cell;
    feature_cell.name = "rq3_feature_side";
    feature_cell.key = {{"side", "feature"}, {"metric_set", "ProcStructMet"}};
    feature_cell.report = std::move(feature_report);
    result.cells.push_back(std::move(feature_cell));

    Cell file_cell;
    file_cell.name = "rq3_file_side";
    file_cell.key = {{"side", "file"}, {"metric_set", "FileCombined32-top75"}};
    file_cell.report = std::move(file_report);
    result.cells.push_back(std::move(file_cell));

    Cell mapping_cell;
    mapping_cell.name = "rq3_mapping";
    mapping_cell.key = {{"side", "mapping"},
                        {"rows", std::to_string(mapping.size())}};
    mapping_cell.extra = std::move(mapping);
    result.cells.push_back(std::move(mapping_cell));
    return result;
}

ScenarioResult rq4_incremental(const ScenarioProject& project, data::Level level,
                               const Options& options) {
    ScenarioResult result;
    result.id = "rq4";
    result.summary.push_back(
        {"scope_index", "scope", "train_instances", "test_instances", "auc", "flags"});

    auto ds = data::assemble({project.inputs()}, level,
                             metrics::MetricSet::ProcStructMet);
    auto scopes = ds.scopes_of(project.name);

    for (size_t n = 1; n < scopes.size(); ++n) {
        std::set<std::string> train_scopes(scopes.begin(),
                                           scopes.begin() + static_cast<long>(n));
        auto train = instances_for_scopes(ds, train_scopes);
        auto test = instances_for_scopes(ds, {scopes[n]});

        Cell cell;
        cell.name = sanitize("rq4_scope" + std::to_string(n));
        cell.key = {{"scope_index", std::to_string(n)}, {"scope", scopes[n]}};

        std::string auc = "";
        if (single_class(train)) {
            cell.flags.push_back("SingleClassTraining");
        } else if (single_class(test)) {
            cell.flags.push_back("SingleClassTest");
        } else {
            long minority = std::min(train.count(label::Label::defective),
                                     train.count(label::Label::clean));
            data::Dataset fitted = train;
            if (minority >= options.smote_k + 1) {
                fitted = data::smote_balance(train, options.smote_k,
                                             options.smote_percent, options.seed)
                             .dataset;
            } else {
                cell.flags.push_back("unbalanced");
            }
            auto spec = learn::make_spec(learn::ClassifierKind::forest, options.seed);
            auto model = learn::train(spec, fitted);
            cell.report = eval::evaluate(model, test);
            auc = fmt(cell.report->auc);
        }

        std::string flags;
        for (const auto& f : cell.flags)
            flags += (flags.empty() ? "" : ";") + f;
        result.summary.push_back({std::to_string(n), scopes[n],
                                  std::to_string(train.instances.size()),
                                  std::to_string(test.instances.size()), auc, flags});
        result.cells.push_back(std::move(cell));
    }
    return result;
}

ScenarioResult rq5_cross_project(const std::vector<ScenarioProject>& projects,
                                 data::Level level, const Options& options) {
    ScenarioResult result;
    result.id = "rq5";
    result.summary.push_back({"k", "train_projects", "test_project", "auc", "flags"});

    std::vector<data::Dataset> per_project;
    for (const auto& p : projects)
        per_project.push_back(data::assemble({p.inputs()}, level,
                                             metrics::MetricSet::ProcStructMet));

    struct Job {
        size_t k;
        std::vector<size_t> members;
        size_t test;
    };
    std::vector<Job> jobs;
    for (size_t k = 1; k < projects.size(); ++k) {
        for (const auto& combo : combinations(projects.size(), k)) {
            for (size_t q = 0; q < projects.size(); ++q) {
                if (std::find(combo.begin(), combo.end(), q) != combo.end())
                    continue;
                jobs.push_back({k, combo, q});
            }
        }
    }

    std::vector<Cell> cells(jobs.size());
    parallel_for(jobs.size(), options.jobs, [&](size_t i) {
        const auto& job = jobs[i];
        std::string members;
        data::Dataset train;
        train.attributes = per_project[job.members[0]].attributes;
        for (size_t m : job.members) {
            members += (members.empty() ? "" : "+") + projects[m].name;
            for (const auto& inst : per_project[m].instances)
                train.instances.push_back(inst);
        }

        Cell cell;
        cell.name = sanitize("rq5_k" + std::to_string(job.k) + "_" + members +
                             "_vs_" + projects[job.test].name);
        cell.key = {{"k", std::to_string(job.k)},
                    {"train_projects", members},
                    {"test_project", projects[job.test].name}};

        const auto& test = per_project[job.test];
        if (single_class(train)) {
            cell.flags.push_back("SingleClassTraining");
        } else if (single_class(test)) {
            cell.flags.push_back("SingleClassTest");
        } else {
            auto balanced = data::smote_balance(train, options.smote_k,
                                                options.smote_percent, options.seed)
                                .dataset;
            auto spec = learn::make_spec(learn::ClassifierKind::forest, options.seed);
            auto model = learn::train(spec, balanced);
            cell.report = eval::evaluate(model, test);
        }
        cells[i] = std::move(cell);
    });

    // k=1 heatmap: one row per training project, one column per test project.
    std::map<std::pair<std::string, std::string>, std::string> k1;
    for (auto& cell : cells) {
        std::string flags;
        for (const auto& f : cell.flags)
            flags += (flags.empty() ? "" : ";") + f;
        result.summary.push_back({cell.key[0].second, cell.key[1].second,
                                  cell.key[2].second,
                                  cell.report ? fmt(cell.report->auc) : "", flags});
        if (cell.key[0].second == "1")
            k1[{cell.key[1].second, cell.key[2].second}] =
                cell.report ? fmt(cell.report->auc) : flags;
        result.cells.push_back(std::move(cell));
    }

    std::vector<std::string> header = {"train\\test"};
    for (const auto& p : projects)
        header.push_back(p.name);
    result.heatmap.push_back(header);
    for (const auto& train : projects) {
        std::vector<std::string> row = {train.name};
        for (const auto& test : projects) {
            auto it = k1.find({train.name, test.name});
            row.push_back(it == k1.end() ? "" : it->second);
        }
        result.heatmap.push_back(std::move(row));
    }
    return result;
}

} // namespace featforge::scenario
