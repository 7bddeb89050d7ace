#pragma once

#include <featforge/dataset.hpp>
#include <featforge/learn.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace featforge::eval {

// Rows are actual, columns predicted; index 0 = defective, 1 = clean.
struct Confusion {
    long counts[2][2] = {{0, 0}, {0, 0}};

    long total() const;
    long support(label::Label cls) const;
    long tp(label::Label cls) const;
    long fp(label::Label cls) const;
    long fn(label::Label cls) const;
    long tn(label::Label cls) const;
};

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
    bool precision_flagged = false; // 0/0 reported as 0
    bool recall_flagged = false;
};

Prf prf(const Confusion& confusion, label::Label cls);

// FP rate = FP / (FP + TN) for the given class treated as positive.
double fp_rate(const Confusion& confusion, label::Label cls);

double weighted_average(const std::map<label::Label, double>& per_class,
                        const std::map<label::Label, long>& supports);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

// Threshold sweep over all distinct scores; AUC by trapezoid. Throws
// SingleClassTest when truths contain one class only.
std::pair<std::vector<RocPoint>, double> roc_auc(const std::vector<bool>& truths,
                                                 const std::vector<double>& scores);

struct EvalReport {
    Confusion confusion;
    std::map<std::string, Prf> per_class; // keys "defective", "clean"
    Prf weighted;
    std::vector<RocPoint> roc;
    double auc = 0.0;

    nlohmann::json to_json() const;
    std::string roc_csv() const; // fpr,tpr rows
};

// Scores the test set with the model (threshold 0.5 for labels).
EvalReport evaluate(const learn::Model& model, const data::Dataset& test);

struct RankedAttribute {
    std::string id;
    double weight = 0.0;
};

// Standard ReliefF on min-max-scaled attributes, descending weights, ties
// broken by attribute id. Throws TooFewInstances when either class has
// fewer than neighbors+1 instances.
std::vector<RankedAttribute> relieff_rank(const data::Dataset& ds, int neighbors = 10,
                                          std::uint64_t seed = 1);

// Top round(fraction * n) attribute ids by ReliefF rank.
std::vector<std::string> top_fraction(const std::vector<RankedAttribute>& ranked,
                                      double fraction);

// Leave-one-attribute-out influence: weightedF(all) - weightedF(all minus a).
std::map<std::string, double> wrapper_influence(const learn::ClassifierSpec& spec,
                                                const data::Dataset& train,
                                                const data::Dataset& test);

} // namespace featforge::eval
