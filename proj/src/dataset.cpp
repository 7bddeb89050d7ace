#include <featforge/dataset.hpp>

#include <featforge/errors.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace featforge::data {

void Dataset::validate() const {
    for (const auto& inst : instances) {
        if (inst.values.size() != attributes.size())
            throw SchemaMismatch("instance vector length " +
                                 std::to_string(inst.values.size()) +
                                 " does not match schema size " +
                                 std::to_string(attributes.size()));
        for (double v : inst.values)
            if (!std::isfinite(v))
                throw SchemaMismatch("non-finite metric value in instance " +
                                     inst.name);
    }
}

std::vector<std::string> Dataset::projects() const {
    std::vector<std::string> out;
    for (const auto& inst : instances)
        if (std::find(out.begin(), out.end(), inst.project) == out.end())
            out.push_back(inst.project);
    return out;
}

std::vector<std::string> Dataset::scopes_of(const std::string& project) const {
    std::vector<std::string> out;
    for (const auto& inst : instances) {
        if (inst.project != project)
            continue;
        if (std::find(out.begin(), out.end(), inst.scope) == out.end())
            out.push_back(inst.scope);
    }
    return out;
}

long Dataset::count(label::Label label) const {
    long n = 0;
    for (const auto& inst : instances)
        if (inst.label == label)
            ++n;
    return n;
}

Dataset Dataset::with_attributes(const std::vector<std::string>& subset) const {
    std::vector<size_t> indices;
    for (const auto& id : subset) {
        auto it = std::find(attributes.begin(), attributes.end(), id);
        if (it == attributes.end())
            throw SchemaMismatch("attribute not in dataset: " + id);
        indices.push_back(static_cast<size_t>(it - attributes.begin()));
    }
    Dataset out;
    out.attributes = subset;
    out.instances.reserve(instances.size());
    for (const auto& inst : instances) {
        Instance copy = inst;
        copy.values.clear();
        for (size_t idx : indices)
            copy.values.push_back(inst.values[idx]);
        out.instances.push_back(std::move(copy));
    }
    return out;
}

Level level_from_string(const std::string& s) {
    if (s == "release")
        return Level::release;
    if (s == "commit")
        return Level::commit;
    throw ConfigError("unknown level: " + s);
}

std::string to_string(Level level) {
    return level == Level::release ? "release" : "commit";
}

namespace {

std::map<std::string, std::set<std::string>> files_by_commit(
    const cache::ProjectCache& cache) {
    std::map<std::string, std::set<std::string>> out;
    for (const auto& rec : cache.commits)
        for (const auto& c : rec.changes)
            out[rec.hash].insert(c.path);
    return out;
}

bool is_feature_set(metrics::MetricSet set) {
    return set == metrics::MetricSet::QueirozMet ||
           set == metrics::MetricSet::ProcMet ||
           set == metrics::MetricSet::ProcStructMet;
}

std::vector<double> feature_values(const std::string& feat,
                                   const metrics::ReleaseContext& ctx,
                                   const metrics::SnapshotFn& snapshot,
                                   metrics::MetricSet set) {
    if (set == metrics::MetricSet::ProcStructMet)
        return metrics::feature_vector(feat, ctx, snapshot);
    auto p = metrics::feature_process_metrics(feat, ctx);
    if (set == metrics::MetricSet::QueirozMet)
        return {p.fcomm, p.fadev, p.fddev, p.fexp, p.foexp};
    return {p.fcomm, p.fadev, p.fddev, p.fexp, p.foexp, p.fmodd, p.faddl, p.freml};
}

void append_scope_instances(Dataset& ds, const ProjectInputs& project,
                            const metrics::ReleaseContext& ctx,
                            const std::set<std::string>& scope_features,
                            const std::map<std::string, label::Label>& file_labels,
                            const std::map<std::string, label::Label>& feature_labels,
                            const std::set<std::string>& scope_files,
                            metrics::MetricSet set) {
    metrics::SnapshotFn snapshot = [&](const std::string& path) {
        return project.snapshot(ctx.snapshot_commit, path);
    };

    if (is_feature_set(set)) {
        for (const auto& feat : scope_features) {
            Instance inst;
            inst.project = project.name;
            inst.scope = ctx.release.tag;
            inst.name = feat;
            inst.values = feature_values(feat, ctx, snapshot, set);
            inst.label = feature_labels.at(feat);
            ds.instances.push_back(std::move(inst));
        }
        return;
    }

    std::map<std::string, std::vector<double>> vectors;
    if (set == metrics::MetricSet::FileCombined32)
        for (const auto& feat : ctx.features)
            vectors[feat] = metrics::feature_vector(feat, ctx, snapshot);

    for (const auto& path : scope_files) {
        Instance inst;
        inst.project = project.name;
        inst.scope = ctx.release.tag;
        inst.name = path;
        inst.values = metrics::file_vector(path, ctx);
        if (set == metrics::MetricSet::FileCombined32) {
            std::set<std::string> in_file;
            for (const auto& [feat, files] : ctx.files_of)
                if (files.count(path))
                    in_file.insert(feat);
            auto agg = metrics::max_aggregate_to_file(in_file, vectors);
            inst.values.insert(inst.values.end(), agg.begin(), agg.end());
        }
        inst.label = file_labels.at(path);
        ds.instances.push_back(std::move(inst));
    }
}

} // namespace

Dataset assemble(const std::vector<ProjectInputs>& projects, Level level,
                 metrics::MetricSet metric_set) {
    Dataset ds;
    ds.attributes = metrics::attribute_ids(metric_set);

    for (const auto& project : projects) {
        const auto& cache = *project.cache;
        auto commit_files = files_by_commit(cache);

        if (level == Level::release) {
            for (size_t r = 0; r < cache.releases.size(); ++r) {
                auto ctx = metrics::build_release_context(cache, static_cast<int>(r),
                                                          *project.refs);
                auto file_labels =
                    label::label_files(ctx.changed_files, ctx.release.commits,
                                       *project.introducers, commit_files);
                auto feature_labels = label::label_features(ctx.files_of, file_labels);
                append_scope_instances(ds, project, ctx, ctx.features, file_labels,
                                       feature_labels, ctx.changed_files, metric_set);
            }
        } else {
            for (size_t n = 0; n < cache.commits.size(); ++n) {
                const auto& scope = cache.commits[n];
                auto ctx = metrics::build_commit_context(cache, n, *project.refs);

                // Instances live only for entities touched by the scope commit.
                std::set<std::string> scope_features;
                auto it = project.refs->find(scope.hash);
                if (it != project.refs->end())
                    for (const auto& [feat, files] : it->second.files)
                        scope_features.insert(feat);
                std::set<std::string> scope_files;
                for (const auto& c : scope.changes)
                    scope_files.insert(c.path);

                bool introducing = project.introducers->count(scope.hash) > 0;
                std::map<std::string, label::Label> file_labels;
                for (const auto& path : ctx.changed_files)
                    file_labels[path] = label::Label::clean;
                for (const auto& path : scope_files)
                    file_labels[path] =
                        introducing ? label::Label::defective : label::Label::clean;
                std::map<std::string, label::Label> feature_labels;
                for (const auto& feat : ctx.features)
                    feature_labels[feat] = label::Label::clean;
                for (const auto& feat : scope_features)
                    feature_labels[feat] =
                        introducing ? label::Label::defective : label::Label::clean;

                if (is_feature_set(metric_set) && scope_features.empty())
                    continue;
                if (!is_feature_set(metric_set) && scope_files.empty())
                    continue;
                append_scope_instances(ds, project, ctx, scope_features, file_labels,
                                       feature_labels, scope_files, metric_set);
            }
        }
    }

    if (ds.instances.empty())
        throw EmptyDataset("assembly produced no instances");
    ds.validate();
    return ds;
}

SplitResult chronological_split(const Dataset& ds, double target_ratio_percent) {
    SplitResult result;
    result.train.attributes = ds.attributes;
    result.test.attributes = ds.attributes;

    std::map<std::string, std::set<std::string>> train_scopes;
    for (const auto& project : ds.projects()) {
        auto scopes = ds.scopes_of(project);
        int n = static_cast<int>(scopes.size());
        if (n < 2)
            throw TooFewReleases("project " + project + " has " + std::to_string(n) +
                                 " scope(s); need at least 2 to split");
        int k = static_cast<int>(std::llround(target_ratio_percent / 100.0 * n));
        k = std::clamp(k, 1, n - 1);
        for (int i = 0; i < k; ++i)
            train_scopes[project].insert(scopes[static_cast<size_t>(i)]);
        result.scope_counts[project] = {k, n - k};
    }

    for (const auto& inst : ds.instances) {
        if (train_scopes[inst.project].count(inst.scope))
            result.train.instances.push_back(inst);
        else
            result.test.instances.push_back(inst);
    }
    return result;
}

SmoteResult smote_balance(const Dataset& train, int k, int percent,
                          std::uint64_t seed) {
    SmoteResult result;
    result.dataset = train;

    long defective = train.count(label::Label::defective);
    long clean = train.count(label::Label::clean);
    result.minority_class =
        defective <= clean ? label::Label::defective : label::Label::clean;
    result.minority_before = std::min(defective, clean);
    result.majority = std::max(defective, clean);

    if (result.minority_before < static_cast<long>(k) + 1)
        throw TooFewMinority("need at least k+1 = " + std::to_string(k + 1) +
                             " minority instances, have " +
                             std::to_string(result.minority_before));

    std::vector<size_t> minority_idx;
    for (size_t i = 0; i < train.instances.size(); ++i)
        if (train.instances[i].label == result.minority_class)
            minority_idx.push_back(i);

    // Min-max scaling fitted on the training set for the distance metric.
    size_t dims = train.attributes.size();
    std::vector<double> lo(dims, 0.0), hi(dims, 0.0);
    for (size_t d = 0; d < dims; ++d) {
        lo[d] = hi[d] = train.instances[0].values[d];
        for (const auto& inst : train.instances) {
            lo[d] = std::min(lo[d], inst.values[d]);
            hi[d] = std::max(hi[d], inst.values[d]);
        }
    }
    auto scaled = [&](size_t idx, size_t d) {
        double range = hi[d] - lo[d];
        return range > 0.0 ? (train.instances[idx].values[d] - lo[d]) / range : 0.0;
    };

    // k nearest minority neighbours per minority instance, self excluded.
    std::vector<std::vector<size_t>> neighbours(minority_idx.size());
    for (size_t a = 0; a < minority_idx.size(); ++a) {
        std::vector<std::pair<double, size_t>> dist;
        for (size_t b = 0; b < minority_idx.size(); ++b) {
            if (a == b)
                continue;
            double d2 = 0.0;
            for (size_t d = 0; d < dims; ++d) {
                double diff = scaled(minority_idx[a], d) - scaled(minority_idx[b], d);
                d2 += diff * diff;
            }
            dist.push_back({d2, minority_idx[b]});
        }
        std::sort(dist.begin(), dist.end());
        for (int i = 0; i < k; ++i)
            neighbours[a].push_back(dist[static_cast<size_t>(i)].second);
    }

    long total = std::lround(static_cast<double>(result.minority_before) * percent / 100.0);
    long base = total / result.minority_before;
    long remainder = total % result.minority_before;

    std::mt19937_64 rng(seed);
    std::vector<size_t> order(minority_idx.size());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<long> per_instance(minority_idx.size(), base);
    for (long i = 0; i < remainder; ++i)
        ++per_instance[order[static_cast<size_t>(i)]];

    std::uniform_int_distribution<size_t> pick(0, static_cast<size_t>(k) - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    long counter = 0;
    for (size_t a = 0; a < minority_idx.size(); ++a) {
        const auto& origin = train.instances[minority_idx[a]];
        for (long rep = 0; rep < per_instance[a]; ++rep) {
            const auto& neighbour = train.instances[neighbours[a][pick(rng)]];
            double gap = unit(rng);
            while (gap == 0.0)
                gap = unit(rng);
            Instance synth;
            synth.project = origin.project;
            synth.scope = origin.scope;
            synth.name = origin.name + "#syn" + std::to_string(counter++);
            synth.label = result.minority_class;
            synth.values.resize(dims);
            for (size_t d = 0; d < dims; ++d)
                synth.values[d] = origin.values[d] +
                                  gap * (neighbour.values[d] - origin.values[d]);
            result.dataset.instances.push_back(std::move(synth));
            ++result.synthetic_added;
        }
    }
    return result;
}

TableFormat format_from_string(const std::string& s) {
    if (s == "csv")
        return TableFormat::csv;
    if (s == "arff")
        return TableFormat::arff;
    throw ConfigError("unknown format: " + s);
}

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos)
        return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"')
            out += "\"\"";
        else
            out += c;
    }
    out += "\"";
    return out;
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    fields.push_back(std::move(field));
    return fields;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "project,scope,name";
    for (const auto& id : ds.attributes)
        out << "," << id;
    out << ",class\n";
    for (const auto& inst : ds.instances) {
        out << csv_quote(inst.project) << "," << csv_quote(inst.scope) << ","
            << csv_quote(inst.name);
        for (double v : inst.values)
            out << "," << format_value(v);
        out << "," << label::to_string(inst.label) << "\n";
    }
}

Dataset read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw SchemaMismatch("empty csv: " + path.string());
    auto header = csv_split(line);
    if (header.size() < 4 || header[0] != "project" || header[1] != "scope" ||
        header[2] != "name" || header.back() != "class")
        throw SchemaMismatch("csv header must be project,scope,name,<metrics>,class");

    Dataset ds;
    ds.attributes.assign(header.begin() + 3, header.end() - 1);
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        auto fields = csv_split(line);
        if (fields.size() != header.size())
            throw SchemaMismatch("csv row width mismatch in " + path.string());
        Instance inst;
        inst.project = fields[0];
        inst.scope = fields[1];
        inst.name = fields[2];
        for (size_t i = 3; i + 1 < fields.size(); ++i)
            inst.values.push_back(std::strtod(fields[i].c_str(), nullptr));
        const std::string& cls = fields.back();
        if (cls != "defective" && cls != "clean")
            throw SchemaMismatch("unknown class value: " + cls);
        inst.label = cls == "defective" ? label::Label::defective : label::Label::clean;
        ds.instances.push_back(std::move(inst));
    }
    ds.validate();
    return ds;
}

std::filesystem::path sidecar_path(const std::filesystem::path& arff) {
    std::filesystem::path p = arff;
    p.replace_extension(".csv");
    return p;
}

void write_arff(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << "@relation featforge\n\n";
    for (const auto& id : ds.attributes)
        out << "@attribute " << id << " numeric\n";
    out << "@attribute class {defective,clean}\n\n@data\n";
    for (const auto& inst : ds.instances) {
        for (double v : inst.values)
            out << format_value(v) << ",";
        out << label::to_string(inst.label) << "\n";
    }
    write_csv(ds, sidecar_path(path));
}

Dataset read_arff(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot read " + path.string());

    Dataset ds;
    bool have_class = false;
    bool in_data = false;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (line.empty() || line[0] == '%')
            continue;
        if (!in_data) {
            std::istringstream fields(line);
            std::string keyword;
            fields >> keyword;
            std::transform(keyword.begin(), keyword.end(), keyword.begin(),
                           [](unsigned char c) { return std::tolower(c); });
            if (keyword == "@attribute") {
                std::string name, type;
                fields >> name;
                std::getline(fields, type);
                if (name == "class") {
                    if (type.find("{defective,clean}") == std::string::npos)
                        throw SchemaMismatch("class attribute must be {defective,clean}");
                    have_class = true;
                } else {
                    if (have_class)
                        throw SchemaMismatch("class attribute must be last");
                    ds.attributes.push_back(name);
                }
            } else if (keyword == "@data") {
                if (!have_class)
                    throw SchemaMismatch("missing class attribute in " + path.string());
                in_data = true;
            }
            continue;
        }
        auto fields = csv_split(line);
        if (fields.size() != ds.attributes.size() + 1)
            throw SchemaMismatch("arff row width mismatch in " + path.string());
        Instance inst;
        for (size_t i = 0; i + 1 < fields.size(); ++i)
            inst.values.push_back(std::strtod(fields[i].c_str(), nullptr));
        const std::string& cls = fields.back();
        if (cls != "defective" && cls != "clean")
            throw SchemaMismatch("unknown class value: " + cls);
        inst.label = cls == "defective" ? label::Label::defective : label::Label::clean;
        ds.instances.push_back(std::move(inst));
    }
    if (!in_data)
        throw SchemaMismatch("no @data section in " + path.string());

    auto sidecar = sidecar_path(path);
    if (std::filesystem::exists(sidecar)) {
        Dataset prov = read_csv(sidecar);
        if (prov.instances.size() == ds.instances.size()) {
            for (size_t i = 0; i < ds.instances.size(); ++i) {
                ds.instances[i].project = prov.instances[i].project;
                ds.instances[i].scope = prov.instances[i].scope;
                ds.instances[i].name = prov.instances[i].name;
            }
        }
    }
    ds.validate();
    return ds;
}

} // namespace

void export_table(const Dataset& ds, TableFormat format,
                  const std::filesystem::path& path) {
    ds.validate();
    if (format == TableFormat::csv)
        write_csv(ds, path);
    else
        write_arff(ds, path);
}

Dataset import_table(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (ext == ".arff")
        return read_arff(path);
    return read_csv(path);
}

} // namespace featforge::data
