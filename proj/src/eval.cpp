#include <featforge/eval.hpp>

#include <featforge/errors.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace featforge::eval {

namespace {

size_t class_index(label::Label cls) {
    return cls == label::Label::defective ? 0 : 1;
}

} // namespace

long Confusion::total() const {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

long Confusion::support(label::Label cls) const {
    size_t i = class_index(cls);
    return counts[i][0] + counts[i][1];
}

long Confusion::tp(label::Label cls) const {
    size_t i = class_index(cls);
    return counts[i][i];
}

long Confusion::fp(label::Label cls) const {
    size_t i = class_index(cls);
    return counts[1 - i][i];
}

long Confusion::fn(label::Label cls) const {
    size_t i = class_index(cls);
    return counts[i][1 - i];
}

long Confusion::tn(label::Label cls) const {
    size_t i = class_index(cls);
    return counts[1 - i][1 - i];
}

Prf prf(const Confusion& confusion, label::Label cls) {
    Prf out;
    double tp = static_cast<double>(confusion.tp(cls));
    double fp = static_cast<double>(confusion.fp(cls));
    double fn = static_cast<double>(confusion.fn(cls));
    if (tp + fp > 0) {
        out.precision = tp / (tp + fp);
    } else {
        out.precision = 0.0;
        out.precision_flagged = true;
    }
    if (tp + fn > 0) {
        out.recall = tp / (tp + fn);
    } else {
        out.recall = 0.0;
        out.recall_flagged = true;
    }
    out.f = (2 * tp + fp + fn) > 0 ? 2 * tp / (2 * tp + fp + fn) : 0.0;
    return out;
}

double fp_rate(const Confusion& confusion, label::Label cls) {
    double fp = static_cast<double>(confusion.fp(cls));
    double tn = static_cast<double>(confusion.tn(cls));
    return fp + tn > 0 ? fp / (fp + tn) : 0.0;
}

double weighted_average(const std::map<label::Label, double>& per_class,
                        const std::map<label::Label, long>& supports) {
    double weighted = 0.0;
    long total = 0;
    for (const auto& [cls, support] : supports) {
        if (support <= 0)
            continue;
        weighted += per_class.at(cls) * static_cast<double>(support);
        total += support;
    }
    return total > 0 ? weighted / static_cast<double>(total) : 0.0;
}

std::pair<std::vector<RocPoint>, double> roc_auc(const std::vector<bool>& truths,
                                                 const std::vector<double>& scores) {
    if (truths.size() != scores.size())
        throw Error("roc_auc: truth/score length mismatch");
    long positives = 0;
    for (bool t : truths)
        positives += t ? 1 : 0;
    long negatives = static_cast<long>(truths.size()) - positives;
    if (positives == 0 || negatives == 0)
        throw SingleClassTest("ROC needs both classes in the ground truth");

    std::vector<size_t> order(truths.size());
    for (size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return scores[a] > scores[b];
    });

    std::vector<RocPoint> roc;
    roc.push_back({0.0, 0.0});
    double auc = 0.0;
    long tp = 0, fp = 0;
    double prev_fpr = 0.0, prev_tpr = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        double score = scores[order[i]];
        // Instances sharing a score cross the threshold together.
        while (i < order.size() && scores[order[i]] == score) {
            if (truths[order[i]])
                ++tp;
            else
                ++fp;
            ++i;
        }
        double tpr = static_cast<double>(tp) / static_cast<double>(positives);
        double fpr = static_cast<double>(fp) / static_cast<double>(negatives);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        roc.push_back({fpr, tpr});
        prev_fpr = fpr;
        prev_tpr = tpr;
    }
    return {std::move(roc), auc};
}

nlohmann::json EvalReport::to_json() const {
    auto prf_json = [](const Prf& p) {
        return nlohmann::json{{"precision", p.precision},
                              {"recall", p.recall},
                              {"f", p.f},
                              {"precision_flagged", p.precision_flagged},
                              {"recall_flagged", p.recall_flagged}};
    };
    nlohmann::json per;
    for (const auto& [name, p] : per_class)
        per[name] = prf_json(p);
    nlohmann::json roc_json = nlohmann::json::array();
    for (const auto& pt : roc)
        roc_json.push_back(nlohmann::json::array({pt.fpr, pt.tpr}));
    return nlohmann::json{
        {"confusion",
         {{"defective_as_defective", confusion.counts[0][0]},
          {"defective_as_clean", confusion.counts[0][1]},
          {"clean_as_defective", confusion.counts[1][0]},
          {"clean_as_clean", confusion.counts[1][1]}}},
        {"per_class", std::move(per)},
        {"weighted", prf_json(weighted)},
        {"fp_rate_defective", fp_rate(confusion, label::Label::defective)},
        {"roc", std::move(roc_json)},
        {"auc", auc}};
}

std::string EvalReport::roc_csv() const {
    std::ostringstream out;
    out << "fpr,tpr\n";
    for (const auto& pt : roc)
        out << data::format_value(pt.fpr) << "," << data::format_value(pt.tpr) << "\n";
    return out.str();
}

EvalReport evaluate(const learn::Model& model, const data::Dataset& test) {
    if (test.attributes != model.schema())
        throw SchemaMismatch("test schema does not match trained model");
    EvalReport report;
    std::vector<bool> truths;
    std::vector<double> scores;
    for (const auto& inst : test.instances) {
        double score = model.predict_proba(inst.values);
        bool actual_defective = inst.label == label::Label::defective;
        bool predicted_defective = score >= 0.5;
        ++report.confusion.counts[actual_defective ? 0 : 1][predicted_defective ? 0 : 1];
        truths.push_back(actual_defective);
        scores.push_back(score);
    }

    Prf defective = prf(report.confusion, label::Label::defective);
    Prf clean = prf(report.confusion, label::Label::clean);
    report.per_class["defective"] = defective;
    report.per_class["clean"] = clean;

    std::map<label::Label, long> supports = {
        {label::Label::defective, report.confusion.support(label::Label::defective)},
        {label::Label::clean, report.confusion.support(label::Label::clean)}};
    report.weighted.precision = weighted_average(
        {{label::Label::defective, defective.precision}, {label::Label::clean, clean.precision}},
        supports);
    report.weighted.recall = weighted_average(
        {{label::Label::defective, defective.recall}, {label::Label::clean, clean.recall}},
        supports);
    report.weighted.f = weighted_average(
        {{label::Label::defective, defective.f}, {label::Label::clean, clean.f}}, supports);

    bool both = supports[label::Label::defective] > 0 && supports[label::Label::clean] > 0;
    if (both) {
        auto [roc, auc] = roc_auc(truths, scores);
        report.roc = std::move(roc);
        report.auc = auc;
    }
    return report;
}

std::vector<RankedAttribute> relieff_rank(const data::Dataset& ds, int neighbors,
                                          std::uint64_t seed) {
    (void)seed; // every instance is sampled, so no randomness is consumed
    long defective = ds.count(label::Label::defective);
    long clean = ds.count(label::Label::clean);
    if (defective < neighbors + 1 || clean < neighbors + 1)
        throw TooFewInstances("ReliefF needs at least neighbors+1 instances per class");

    learn::Scaler scaler;
    scaler.fit(ds);
    std::vector<std::vector<double>> points;
    std::vector<int> labels;
    for (const auto& inst : ds.instances) {
        points.push_back(scaler.apply(inst.values));
        labels.push_back(inst.label == label::Label::defective ? 1 : 0);
    }

    size_t dims = ds.attributes.size();
    std::vector<double> weights(dims, 0.0);
    size_t n = points.size();
    size_t k = static_cast<size_t>(neighbors);

    for (size_t i = 0; i < n; ++i) {
        struct Candidate {
            double dist;
            size_t index;
        };
        std::vector<Candidate> hits, misses;
        for (size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            double d = 0.0;
            for (size_t a = 0; a < dims; ++a)
                d += std::abs(points[i][a] - points[j][a]);
            (labels[j] == labels[i] ? hits : misses).push_back({d, j});
        }
        // Order-independent tie-break: distance, then vector content.
        auto by_distance = [&](const Candidate& a, const Candidate& b) {
            if (a.dist != b.dist)
                return a.dist < b.dist;
            return points[a.index] < points[b.index];
        };
        std::sort(hits.begin(), hits.end(), by_distance);
        std::sort(misses.begin(), misses.end(), by_distance);

        double denom = static_cast<double>(n) * static_cast<double>(k);
        for (size_t h = 0; h < k && h < hits.size(); ++h)
            for (size_t a = 0; a < dims; ++a)
                weights[a] -= std::abs(points[i][a] - points[hits[h].index][a]) / denom;
        for (size_t m = 0; m < k && m < misses.size(); ++m)
            for (size_t a = 0; a < dims; ++a)
                weights[a] += std::abs(points[i][a] - points[misses[m].index][a]) / denom;
    }

    std::vector<RankedAttribute> ranked;
    for (size_t a = 0; a < dims; ++a)
        ranked.push_back({ds.attributes[a], weights[a]});
    std::sort(ranked.begin(), ranked.end(),
              [](const RankedAttribute& a, const RankedAttribute& b) {
                  if (a.weight != b.weight)
                      return a.weight > b.weight;
                  return a.id < b.id;
              });
    return ranked;
}

std::vector<std::string> top_fraction(const std::vector<RankedAttribute>& ranked,
                                      double fraction) {
    long keep = std::lround(fraction * static_cast<double>(ranked.size()));
    keep = std::clamp<long>(keep, 1, static_cast<long>(ranked.size()));
    std::vector<std::string> ids;
    for (long i = 0; i < keep; ++i)
        ids.push_back(ranked[static_cast<size_t>(i)].id);
    return ids;
}

std::map<std::string, double> wrapper_influence(const learn::ClassifierSpec& spec,
                                                const data::Dataset& train,
                                                const data::Dataset& test) {
    learn::Model full = learn::train(spec, train);
    double full_f = evaluate(full, test).weighted.f;

    std::map<std::string, double> influence;
    for (const auto& attr : train.attributes) {
        std::vector<std::string> reduced;
        for (const auto& id : train.attributes)
            if (id != attr)
                reduced.push_back(id);
        learn::Model model = learn::train(spec, train.with_attributes(reduced));
        double f = evaluate(model, test.with_attributes(reduced)).weighted.f;
        influence[attr] = full_f - f;
    }
    return influence;
}

} // namespace featforge::eval
