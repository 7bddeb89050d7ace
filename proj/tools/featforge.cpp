#include <featforge/bug_label.hpp>
#include <featforge/cache.hpp>
#include <featforge/config.hpp>
#include <featforge/dataset.hpp>
#include <featforge/errors.hpp>
#include <featforge/eval.hpp>
#include <featforge/learn.hpp>
#include <featforge/scenario.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

namespace featforge::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Pipeline state shared by the subcommands
// ---------------------------------------------------------------------------

struct MinedProject {
    ProjectEntry entry;
    std::shared_ptr<repo::RepoHandle> repo;
    cache::ProjectCache cache;
    label::ProjectLabels labels;
    std::map<std::string, metrics::CommitFeatureRefs> refs;
    feature::Diagnostics diagnostics;

    // Memoized snapshots; scenario cells query from worker threads.
    mutable std::map<std::pair<std::string, std::string>, std::optional<std::string>>
        snapshot_memo;
    mutable std::mutex snapshot_mu;

    std::optional<std::string> snapshot(const std::string& commit,
                                        const std::string& path) const {
        std::lock_guard<std::mutex> lock(snapshot_mu);
        auto key = std::make_pair(commit, path);
        auto it = snapshot_memo.find(key);
        if (it != snapshot_memo.end())
            return it->second;
        auto text = repo::file_snapshot(*repo, commit, path);
        snapshot_memo.emplace(std::move(key), text);
        return text;
    }
};

std::filesystem::path labels_path(const Config& config, const std::string& project) {
    return config.cache_dir / (project + ".labels.json");
}

std::filesystem::path traces_path(const Config& config, const std::string& project) {
    return config.cache_dir / (project + ".traces.jsonl");
}

std::string cache_fingerprint(const cache::ProjectCache& cache) {
    return std::to_string(cache.commits.size()) + ":" +
           (cache.commits.empty() ? "" : cache.commits.back().hash);
}

void mine_one(MinedProject& mp, const Config& config) {
    mp.repo = std::make_shared<repo::RepoHandle>(repo::RepoHandle::open(mp.entry.repo));
    mp.cache = cache::mine_project(*mp.repo, mp.entry.name, mp.entry.tags,
                                   config.cache_dir);
}

void label_one(MinedProject& mp, const Config& config) {
    auto file = labels_path(config, mp.entry.name);
    std::string fingerprint = cache_fingerprint(mp.cache);
    if (std::filesystem::exists(file)) {
        std::ifstream in(file);
        std::stringstream buf;
        buf << in.rdbuf();
        json doc = json::parse(buf.str(), nullptr, false);
        if (!doc.is_discarded() && doc.value("fingerprint", "") == fingerprint) {
            mp.labels.corrective = doc.at("corrective").get<std::vector<std::string>>();
            for (const auto& h : doc.at("introducers"))
                mp.labels.introducers.insert(h.get<std::string>());
            return;
        }
    }

    const auto& keywords =
        config.keywords.empty() ? label::default_keywords() : config.keywords;
    mp.labels = label::trace_project(*mp.repo, mp.cache.commits, keywords);

    json doc{{"fingerprint", fingerprint},
             {"corrective", mp.labels.corrective},
             {"introducers", mp.labels.introducers}};
    std::ofstream out(file, std::ios::binary);
    out << doc.dump(2) << "\n";
    std::ofstream traces(traces_path(config, mp.entry.name), std::ios::binary);
    for (const auto& trace : mp.labels.traces)
        traces << trace.to_json() << "\n";
}

void extract_one(MinedProject& mp, const Config& config) {
    mp.refs = metrics::extract_all_refs(mp.cache, &mp.diagnostics);
    std::ofstream out(config.cache_dir / (mp.entry.name + ".diagnostics.json"),
                      std::ios::binary);
    out << mp.diagnostics.to_json() << "\n";
}

std::vector<std::unique_ptr<MinedProject>> prepare(const Config& config) {
    std::vector<std::unique_ptr<MinedProject>> projects;
    for (const auto& entry : config.projects) {
        auto mp = std::make_unique<MinedProject>();
        mp->entry = entry;
        mine_one(*mp, config);
        label_one(*mp, config);
        extract_one(*mp, config);
        projects.push_back(std::move(mp));
    }
    return projects;
}

std::vector<scenario::ScenarioProject> to_scenario(
    const std::vector<std::unique_ptr<MinedProject>>& mined) {
    std::vector<scenario::ScenarioProject> projects;
    for (const auto& mp : mined) {
        scenario::ScenarioProject sp;
        sp.name = mp->entry.name;
        sp.split_ratio = mp->entry.split;
        sp.cache = &mp->cache;
        sp.refs = mp->refs;
        sp.introducers = mp->labels.introducers;
        const MinedProject* raw = mp.get();
        sp.snapshot = [raw](const std::string& commit, const std::string& path) {
            return raw->snapshot(commit, path);
        };
        projects.push_back(std::move(sp));
    }
    return projects;
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

int cmd_mine(const Config& config) {
    for (const auto& entry : config.projects) {
        MinedProject mp;
        mp.entry = entry;
        mine_one(mp, config);
        std::cout << entry.name << ": " << mp.cache.commits.size() << " commits, "
                  << mp.cache.releases.size() << " releases -> "
                  << cache::commits_path(config.cache_dir, entry.name).string() << "\n";
    }
    return 0;
}

int cmd_label(const Config& config) {
    for (const auto& entry : config.projects) {
        MinedProject mp;
        mp.entry = entry;
        mine_one(mp, config);
        label_one(mp, config);
        std::cout << entry.name << ": " << mp.labels.corrective.size()
                  << " corrective commits, " << mp.labels.introducers.size()
                  << " bug-introducing commits\n";
    }
    return 0;
}

int cmd_dataset(const Config& config, const std::string& level_s,
                const std::string& metric_set_s, const std::string& format_s,
                const std::filesystem::path& out_dir, bool do_split, bool do_smote) {
    auto mined = prepare(config);
    auto projects = to_scenario(mined);

    std::vector<data::ProjectInputs> inputs;
    for (const auto& p : projects)
        inputs.push_back(p.inputs());

    auto level = data::level_from_string(level_s);
    auto metric_set = metrics::metric_set_from_string(metric_set_s);
    auto format = data::format_from_string(format_s);
    std::string ext = format == data::TableFormat::csv ? ".csv" : ".arff";

    std::filesystem::create_directories(out_dir);
    auto ds = data::assemble(inputs, level, metric_set);
    data::export_table(ds, format, out_dir / ("full" + ext));
    std::cout << "full: " << ds.instances.size() << " instances, "
              << ds.attributes.size() << " attributes\n";

    if (do_split) {
        auto split = scenario::split_by_project(ds, projects);
        for (const auto& [name, counts] : split.scope_counts)
            std::cout << name << ": " << counts.first << " train / " << counts.second
                      << " test scopes\n";
        data::Dataset train = split.train;
        if (do_smote) {
            auto balanced = data::smote_balance(train, 5, 100, config.seed);
            std::cout << "smote: minority " << balanced.minority_before << " -> "
                      << balanced.minority_before + balanced.synthetic_added
                      << ", majority " << balanced.majority << "\n";
            train = std::move(balanced.dataset);
        }
        data::export_table(train, format, out_dir / ("train" + ext));
        data::export_table(split.test, format, out_dir / ("test" + ext));
    }
    return 0;
}

int cmd_train(const std::filesystem::path& input, const std::string& classifier,
              std::uint64_t seed, const std::filesystem::path& output) {
    auto ds = data::import_table(input);
    auto spec = learn::make_spec(learn::kind_from_string(classifier), seed);
    auto model = learn::train(spec, ds);
    std::ofstream out(output, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + output.string());
    out << model.to_json().dump(2) << "\n";
    std::cout << "trained " << classifier << " on " << ds.instances.size()
              << " instances -> " << output.string() << "\n";
    return 0;
}

int cmd_evaluate(const std::filesystem::path& model_path,
                 const std::filesystem::path& input,
                 const std::filesystem::path& out_dir) {
    std::ifstream in(model_path);
    if (!in)
        throw IoError("cannot read " + model_path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto model = learn::Model::from_json(json::parse(buf.str()));
    auto ds = data::import_table(input);
    auto report = eval::evaluate(model, ds);

    std::filesystem::create_directories(out_dir);
    std::ofstream report_out(out_dir / "report.json", std::ios::binary);
    report_out << report.to_json().dump(2) << "\n";
    std::ofstream roc_out(out_dir / "roc.csv", std::ios::binary);
    roc_out << report.roc_csv();
    std::cout << "weighted f " << report.weighted.f << ", auc " << report.auc << "\n";
    return 0;
}

int cmd_scenario(const Config& config, const std::string& which,
                 const std::string& level_s, const std::filesystem::path& out_root) {
    auto mined = prepare(config);
    auto projects = to_scenario(mined);

    scenario::Options options;
    options.seed = config.seed;
    options.jobs = config.jobs;
    auto level = data::level_from_string(level_s);

    if (which == "rq1") {
        scenario::rq1_grid(projects, options).write(out_root / "rq1");
    } else if (which == "rq2") {
        scenario::rq2_file_level(projects, options).write(out_root / "rq2");
    } else if (which == "rq3") {
        scenario::rq3_compare(projects, options).write(out_root / "rq3");
    } else if (which == "rq4") {
        for (const auto& project : projects)
            scenario::rq4_incremental(project, level, options)
                .write(out_root / "rq4" / project.name);
    } else if (which == "rq5") {
        scenario::rq5_cross_project(projects, level, options)
            .write(out_root / "rq5");
    } else {
        throw ConfigError("unknown scenario: " + which);
    }
    std::cout << which << " written under " << out_root.string() << "\n";
    return 0;
}

int cmd_report(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir / "cells"))
        if (entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    std::ofstream out(dir / "report.csv", std::ios::binary);
    out << "cell,flags,auc,weighted_precision,weighted_recall,weighted_f\n";
    for (const auto& file : files) {
        std::ifstream in(file);
        std::stringstream buf;
        buf << in.rdbuf();
        json cell = json::parse(buf.str());
        std::string flags;
        for (const auto& f : cell.at("flags"))
            flags += (flags.empty() ? "" : ";") + f.get<std::string>();
        out << file.stem().string() << "," << flags;
        if (cell.at("report").is_null()) {
            out << ",,,,\n";
        } else {
            const auto& report = cell.at("report");
            out << "," << report.at("auc").get<double>() << ","
                << report.at("weighted").at("precision").get<double>() << ","
                << report.at("weighted").at("recall").get<double>() << ","
                << report.at("weighted").at("f").get<double>() << "\n";
        }
    }
    std::cout << (dir / "report.csv").string() << "\n";
    return 0;
}

} // namespace

int run(int argc, char** argv) {
    CLI::App app{"featforge: feature-oriented defect prediction over git history"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed_flag = 0;
    bool seed_set = false;
    int jobs = 0;
    app.add_option("-c,--config", config_path, "project config JSON");
    app.add_option("--seed", seed_flag, "override config seed")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--jobs", jobs, "worker pool size (default: cores)");

    auto* mine = app.add_subcommand("mine", "mine repositories into JSONL caches");
    auto* label_cmd =
        app.add_subcommand("label", "corrective commits, SZZ traces and labels");

    std::string level = "release";
    std::string metric_set = "ProcStructMet";
    std::string format = "csv";
    std::string out_dir = "out/dataset";
    bool do_split = false;
    bool do_smote = false;
    const std::vector<std::string> level_names = {"release", "commit"};
    const std::vector<std::string> metric_set_names = {
        "QueirozMet", "ProcMet", "ProcStructMet", "FileMoser17", "FileCombined32"};
    auto* dataset = app.add_subcommand("dataset", "assemble, split and export datasets");
    dataset->add_option("--level", level, "release|commit")
        ->check(CLI::IsMember(level_names));
    dataset->add_option("--metric-set", metric_set,
                        "QueirozMet|ProcMet|ProcStructMet|FileMoser17|FileCombined32")
        ->check(CLI::IsMember(metric_set_names));
    dataset->add_option("--format", format, "csv|arff")
        ->check(CLI::IsMember({"csv", "arff"}));
    dataset->add_option("-o,--out", out_dir, "output directory");
    dataset->add_flag("--split", do_split, "write chronological train/test split");
    dataset->add_flag("--smote", do_smote, "SMOTE-balance the training split");

    std::string train_input, classifier = "forest", model_out = "model.json";
    auto* train = app.add_subcommand("train", "train a classifier on a dataset file");
    train->add_option("--input", train_input, "dataset file (csv or arff)")->required();
    train->add_option("--classifier", classifier, "tree|forest|nb|knn|logreg|svm|mlp")
        ->check(CLI::IsMember({"tree", "forest", "nb", "knn", "logreg", "svm", "mlp"}));
    train->add_option("-o,--out", model_out, "model JSON output");

    std::string eval_model, eval_input, eval_out = "out/evaluate";
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a model on a dataset file");
    evaluate->add_option("--model", eval_model, "model JSON")->required();
    evaluate->add_option("--input", eval_input, "dataset file")->required();
    evaluate->add_option("-o,--out", eval_out, "output directory");

    std::string which, scenario_level = "release", scenario_out = "out";
    auto* scenario_cmd = app.add_subcommand("scenario", "run an experiment family");
    scenario_cmd->add_option("name", which, "rq1|rq2|rq3|rq4|rq5")
        ->required()
        ->check(CLI::IsMember({"rq1", "rq2", "rq3", "rq4", "rq5"}));
    scenario_cmd->add_option("--level", scenario_level, "release|commit")
        ->check(CLI::IsMember(level_names));
    scenario_cmd->add_option("-o,--out", scenario_out, "output root");

    std::string report_dir;
    auto* report = app.add_subcommand("report", "render summary CSV from a scenario dir");
    report->add_option("--dir", report_dir, "scenario output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)
            return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (report->parsed())
            return cmd_report(report_dir);
        if (train->parsed())
            return cmd_train(train_input, classifier, seed_set ? seed_flag : 1,
                             model_out);
        if (evaluate->parsed())
            return cmd_evaluate(eval_model, eval_input, eval_out);

        if (config_path.empty()) {
            std::cerr << "error: this subcommand requires -c/--config <file>\n";
            return 2;
        }
        Config config = load_config(config_path);
        if (seed_set)
            config.seed = seed_flag;
        if (jobs > 0)
            config.jobs = jobs;

        if (mine->parsed())
            return cmd_mine(config);
        if (label_cmd->parsed())
            return cmd_label(config);
        if (dataset->parsed())
            return cmd_dataset(config, level, metric_set, format, out_dir, do_split,
                               do_smote);
        if (scenario_cmd->parsed())
            return cmd_scenario(config, which, scenario_level, scenario_out);
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace featforge::cli

int main(int argc, char** argv) {
    return featforge::cli::run(argc, argv);
}
