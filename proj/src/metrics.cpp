#include <featforge/metrics.hpp>

#include <featforge/bug_label.hpp>
#include <featforge/errors.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>

namespace featforge::metrics {

namespace {

constexpr double kSecondsPerWeek = 7.0 * 24.0 * 3600.0;

bool commit_touches(const repo::CommitRecord& rec, const std::string& path) {
    for (const auto& c : rec.changes)
        if (c.path == path)
            return true;
    return false;
}

bool commit_touches_any(const repo::CommitRecord& rec,
                        const std::set<std::string>& files) {
    for (const auto& c : rec.changes)
        if (files.count(c.path))
            return true;
    return false;
}

// Geometric mean; when a zero factor is present every value is shifted by
// one before and the mean shifted back after, so one idle contributor does
// not collapse the mean to zero.
double experience_geometric_mean(const std::vector<long>& values) {
    if (values.empty())
        return 0.0;
    if (values.size() == 1)
        return static_cast<double>(values[0]);
    bool any_zero = false;
    for (long v : values)
        if (v == 0)
            any_zero = true;
    double shift = any_zero ? 1.0 : 0.0;
    double log_sum = 0.0;
    for (long v : values)
        log_sum += std::log(static_cast<double>(v) + shift);
    return std::exp(log_sum / static_cast<double>(values.size())) - shift;
}

const std::vector<std::string>& refactor_keywords() {
    static const std::vector<std::string> keywords = {"refactor", "refactoring",
                                                      "refactored"};
    return keywords;
}

} // namespace

MetricSet metric_set_from_string(const std::string& s) {
    if (s == "QueirozMet" || s == "queiroz")
        return MetricSet::QueirozMet;
    if (s == "ProcMet" || s == "proc")
        return MetricSet::ProcMet;
    if (s == "ProcStructMet" || s == "procstruct")
        return MetricSet::ProcStructMet;
    if (s == "FileMoser17" || s == "file17")
        return MetricSet::FileMoser17;
    if (s == "FileCombined32" || s == "file32")
        return MetricSet::FileCombined32;
    throw ConfigError("unknown metric set: " + s);
}

std::string to_string(MetricSet set) {
    switch (set) {
    case MetricSet::QueirozMet:
        return "QueirozMet";
    case MetricSet::ProcMet:
        return "ProcMet";
    case MetricSet::ProcStructMet:
        return "ProcStructMet";
    case MetricSet::FileMoser17:
        return "FileMoser17";
    case MetricSet::FileCombined32:
        return "FileCombined32";
    }
    return "ProcStructMet";
}

const std::vector<std::string>& attribute_ids(MetricSet set) {
    static const std::vector<std::string> queiroz = {"fcomm", "fadev", "fddev",
                                                     "fexp", "foexp"};
    static const std::vector<std::string> proc = {
        "fcomm", "fadev", "fddev", "fexp", "foexp", "fmodd", "faddl", "freml"};
    static const std::vector<std::string> proc_struct = {
        "fcomm", "fadev", "fddev", "fexp",  "foexp", "fmodd", "faddl",
        "freml", "fnloc", "fcyco", "lofc",  "ndep",  "scat",  "tanga"};
    static const std::vector<std::string> moser = {
        "revi", "refa", "bugf", "auth", "addl", "addm", "adda", "reml", "remm",
        "rema", "cchn", "cchm", "ccha", "maxc", "avgc", "aage", "wage"};
    static const std::vector<std::string> combined = [] {
        std::vector<std::string> ids = moser;
        ids.insert(ids.end(), proc_struct.begin(), proc_struct.end());
        ids.push_back("fnof");
        return ids;
    }();
    switch (set) {
    case MetricSet::QueirozMet:
        return queiroz;
    case MetricSet::ProcMet:
        return proc;
    case MetricSet::ProcStructMet:
        return proc_struct;
    case MetricSet::FileMoser17:
        return moser;
    case MetricSet::FileCombined32:
        return combined;
    }
    return proc_struct;
}

long developer_experience(const std::string& dev, const ReleaseContext& ctx,
                          const std::set<std::string>& files) {
    long lines = 0;
    for (const auto* rec : ctx.release_commits) {
        if (rec->author != dev || !commit_touches_any(*rec, files))
            continue;
        lines += rec->added_total() + rec->deleted_total();
    }
    return lines;
}

FeatureProcess feature_process_metrics(const std::string& feature,
                                       const ReleaseContext& ctx) {
    if (!ctx.features.count(feature))
        throw FeatureNotInRelease("feature not affected in this scope: " + feature);

    FeatureProcess m;
    const auto& files = ctx.files_of.at(feature);

    // Commits in R referencing the feature, and their authors.
    std::vector<const repo::CommitRecord*> referencing;
    std::set<std::string> release_authors;
    long ref_total = 0;
    for (const auto* rec : ctx.release_commits) {
        const auto& refs = ctx.refs_of(rec->hash);
        auto it = refs.counts.find(feature);
        if (it == refs.counts.end())
            continue;
        referencing.push_back(rec);
        release_authors.insert(rec->author);
        ref_total += it->second;
    }
    m.fcomm = static_cast<double>(referencing.size());
    m.fadev = static_cast<double>(release_authors.size());
    m.fmodd = referencing.empty()
                  ? 0.0
                  : static_cast<double>(ref_total) / static_cast<double>(referencing.size());

    std::set<std::string> cumulative_authors;
    for (const auto* rec : ctx.cumulative_commits) {
        const auto& refs = ctx.refs_of(rec->hash);
        if (refs.counts.count(feature))
            cumulative_authors.insert(rec->author);
    }
    m.fddev = static_cast<double>(cumulative_authors.size());

    std::vector<long> experiences;
    for (const auto& dev : release_authors)
        experiences.push_back(developer_experience(dev, ctx, files));
    m.fexp = experience_geometric_mean(experiences);

    // FOEXP: per file of A, the author with the most feature-referencing
    // commits touching that file in R (lexicographic tie-break), averaged.
    if (!files.empty()) {
        double sum = 0.0;
        for (const auto& path : files) {
            std::map<std::string, long> per_author;
            for (const auto* rec : ctx.release_commits) {
                const auto& refs = ctx.refs_of(rec->hash);
                bool references_here = false;
                for (const auto& [feat, feat_files] : refs.files) {
                    if (feat_files.count(path)) {
                        references_here = true;
                        break;
                    }
                }
                if (references_here)
                    ++per_author[rec->author];
            }
            std::string top;
            long best = -1;
            for (const auto& [author, count] : per_author) {
                if (count > best) { // map order breaks ties lexicographically
                    best = count;
                    top = author;
                }
            }
            if (!top.empty())
                sum += static_cast<double>(developer_experience(top, ctx, files));
        }
        m.foexp = sum / static_cast<double>(files.size());
    }

    // Average added/deleted lines per associated file over R.
    if (!files.empty()) {
        double added = 0.0;
        double deleted = 0.0;
        for (const auto& path : files) {
            for (const auto* rec : ctx.release_commits) {
                for (const auto& c : rec->changes) {
                    if (c.path != path)
                        continue;
                    added += static_cast<double>(c.added_lines.size());
                    deleted += static_cast<double>(c.deleted_lines.size());
                }
            }
        }
        m.faddl = added / static_cast<double>(files.size());
        m.freml = deleted / static_cast<double>(files.size());
    }
    return m;
}

long nonblank_loc(const std::string& file_text) {
    long count = 0;
    size_t start = 0;
    while (start <= file_text.size()) {
        size_t end = file_text.find('\n', start);
        size_t len = (end == std::string::npos ? file_text.size() : end) - start;
        if (end == std::string::npos && len == 0)
            break;
        bool blank = true;
        for (size_t i = start; i < start + len && blank; ++i) {
            char c = file_text[i];
            blank = c == ' ' || c == '\t' || c == '\r';
        }
        if (!blank)
            ++count;
        if (end == std::string::npos)
            break;
        start = end + 1;
    }
    return count;
}

long cyclomatic_complexity(const std::string& file_text) {
    long decisions = 0;
    bool in_block_comment = false;

    size_t start = 0;
    while (start <= file_text.size()) {
        size_t end = file_text.find('\n', start);
        std::string line = file_text.substr(
            start, (end == std::string::npos ? file_text.size() : end) - start);
        if (end == std::string::npos && line.empty())
            break;

        // Preprocessor lines are not decision points.
        size_t first = line.find_first_not_of(" \t\r");
        bool preprocessor =
            !in_block_comment && first != std::string::npos && line[first] == '#';

        bool in_string = false;
        bool in_char = false;
        for (size_t i = 0; i < line.size();) {
            if (in_block_comment) {
                if (line.compare(i, 2, "*/") == 0) {
                    in_block_comment = false;
                    i += 2;
                } else {
                    ++i;
                }
                continue;
            }
            if (in_string || in_char) {
                if (line[i] == '\\')
                    i += 2;
                else if (in_string && line[i] == '"') {
                    in_string = false;
                    ++i;
                } else if (in_char && line[i] == '\'') {
                    in_char = false;
                    ++i;
                } else {
                    ++i;
                }
                continue;
            }
            if (line.compare(i, 2, "//") == 0)
                break;
            if (line.compare(i, 2, "/*") == 0) {
                in_block_comment = true;
                i += 2;
                continue;
            }
            if (line[i] == '"') {
                in_string = true;
                ++i;
                continue;
            }
            if (line[i] == '\'') {
                in_char = true;
                ++i;
                continue;
            }
            if (preprocessor) {
                ++i;
                continue;
            }
            if (line.compare(i, 2, "&&") == 0 || line.compare(i, 2, "||") == 0) {
                ++decisions;
                i += 2;
                continue;
            }
            if (line[i] == '?') {
                ++decisions;
                ++i;
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(line[i])) || line[i] == '_') {
                size_t word_start = i;
                while (i < line.size() &&
                       (std::isalnum(static_cast<unsigned char>(line[i])) ||
                        line[i] == '_'))
                    ++i;
                std::string word = line.substr(word_start, i - word_start);
                if (word == "if" || word == "for" || word == "while" || word == "case")
                    ++decisions;
                continue;
            }
            ++i;
        }

        if (end == std::string::npos)
            break;
        start = end + 1;
    }
    return 1 + decisions;
}

FeatureStructure feature_structure_metrics(const std::string& feature,
                                           const ReleaseContext& ctx,
                                           const SnapshotFn& snapshot) {
    FeatureStructure m;
    auto it = ctx.files_of.find(feature);
    if (it == ctx.files_of.end())
        return m;

    std::map<std::string, std::string> snapshots;
    for (const auto& path : it->second) {
        auto text = snapshot(path);
        if (text)
            snapshots[path] = std::move(*text);
    }
    if (snapshots.empty())
        return m;

    double loc_sum = 0.0;
    double cyco_sum = 0.0;
    for (const auto& [path, text] : snapshots) {
        loc_sum += static_cast<double>(nonblank_loc(text));
        cyco_sum += static_cast<double>(cyclomatic_complexity(text));
    }
    m.fnloc = loc_sum / static_cast<double>(snapshots.size());
    m.fcyco = cyco_sum / static_cast<double>(snapshots.size());

    auto profile = feature::structure_profile(snapshots, {feature});
    const auto& fs = profile.at(feature);
    m.lofc = static_cast<double>(fs.lofc);
    m.ndep = static_cast<double>(fs.ndep);
    m.scat = static_cast<double>(fs.scat);
    m.tanga = static_cast<double>(fs.tanga);
    return m;
}

FileProcess file_process_metrics(const std::string& path, const ReleaseContext& ctx) {
    FileProcess m;

    std::set<std::string> authors;
    std::vector<double> adds;
    std::vector<double> dels;
    std::vector<double> changesets;
    for (const auto* rec : ctx.release_commits) {
        const repo::FileChange* change = nullptr;
        for (const auto& c : rec->changes)
            if (c.path == path)
                change = &c;
        if (!change)
            continue;
        m.revi += 1;
        authors.insert(rec->author);
        adds.push_back(static_cast<double>(change->added_lines.size()));
        dels.push_back(static_cast<double>(change->deleted_lines.size()));
        changesets.push_back(static_cast<double>(rec->changes.size()));
        if (label::classify_corrective(rec->message_first_line).is_corrective)
            m.bugf += 1;
        if (label::classify_corrective(rec->message_first_line, refactor_keywords())
                .is_corrective)
            m.refa += 1;
    }
    m.auth = static_cast<double>(authors.size());

    for (size_t i = 0; i < adds.size(); ++i) {
        m.addl += adds[i];
        m.reml += dels[i];
        m.addm = std::max(m.addm, adds[i]);
        m.remm = std::max(m.remm, dels[i]);
        m.cchm = std::max(m.cchm, adds[i] + dels[i]);
    }
    m.cchn = m.addl + m.reml;
    if (!adds.empty()) {
        m.adda = m.addl / static_cast<double>(adds.size());
        m.rema = m.reml / static_cast<double>(dels.size());
        m.ccha = m.cchn / static_cast<double>(adds.size());
    }
    for (double cs : changesets)
        m.maxc = std::max(m.maxc, cs);
    if (!changesets.empty()) {
        double sum = 0.0;
        for (double cs : changesets)
            sum += cs;
        m.avgc = sum / static_cast<double>(changesets.size());
    }

    // Age metrics look back over the whole history up to the scope end.
    std::int64_t end_ts = 0;
    for (const auto* rec : ctx.release_commits)
        if (rec->hash == ctx.snapshot_commit)
            end_ts = rec->timestamp;
    double weighted_sum = 0.0;
    double weight = 0.0;
    bool seen = false;
    double oldest = 0.0;
    for (const auto* rec : ctx.cumulative_commits) {
        if (!commit_touches(*rec, path))
            continue;
        double age_weeks =
            static_cast<double>(end_ts - rec->timestamp) / kSecondsPerWeek;
        if (!seen || age_weeks > oldest)
            oldest = age_weeks;
        seen = true;
        double added = 0.0;
        for (const auto& c : rec->changes)
            if (c.path == path)
                added = static_cast<double>(c.added_lines.size());
        weighted_sum += age_weeks * added;
        weight += added;
    }
    m.aage = seen ? oldest : 0.0;
    m.wage = weight > 0.0 ? weighted_sum / weight : m.aage;
    return m;
}

std::vector<double> feature_vector(const std::string& feature,
                                   const ReleaseContext& ctx,
                                   const SnapshotFn& snapshot) {
    FeatureProcess p = feature_process_metrics(feature, ctx);
    FeatureStructure s = feature_structure_metrics(feature, ctx, snapshot);
    return {p.fcomm, p.fadev, p.fddev, p.fexp,  p.foexp, p.fmodd, p.faddl,
            p.freml, s.fnloc, s.fcyco, s.lofc,  s.ndep,  s.scat,  s.tanga};
}

std::vector<double> file_vector(const std::string& path, const ReleaseContext& ctx) {
    FileProcess m = file_process_metrics(path, ctx);
    return {m.revi, m.refa, m.bugf, m.auth, m.addl, m.addm, m.adda, m.reml, m.remm,
            m.rema, m.cchn, m.cchm, m.ccha, m.maxc, m.avgc, m.aage, m.wage};
}

std::vector<double> max_aggregate_to_file(
    const std::set<std::string>& features_in_file,
    const std::map<std::string, std::vector<double>>& feature_vectors) {
    std::vector<double> out(15, 0.0);
    for (const auto& feat : features_in_file) {
        const auto& vec = feature_vectors.at(feat);
        for (size_t i = 0; i < 14; ++i)
            out[i] = std::max(out[i], vec[i]);
    }
    out[14] = static_cast<double>(features_in_file.size());
    return out;
}

} // namespace featforge::metrics
