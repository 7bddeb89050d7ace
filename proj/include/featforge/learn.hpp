#pragma once

#include <featforge/dataset.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace featforge::learn {

enum class ClassifierKind { tree, forest, nb, knn, logreg, svm, mlp };

ClassifierKind kind_from_string(const std::string& s);
std::string to_string(ClassifierKind kind);
const std::vector<ClassifierKind>& all_kinds();

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::forest;
    std::uint64_t seed = 1;

    int tree_min_leaf = 2; // J48-style trees; forests grow theirs to 1
    int forest_trees = 200;
    bool forest_bootstrap = true;
    int forest_attr_subset = -1; // -1: floor(log2(n_attrs)) + 1, 0: all

    int knn_k = 1;

    double logreg_lr = 0.1;
    int logreg_epochs = 1000;
    double logreg_l2 = 1e-8;

    double svm_c = 1.0;
    int svm_epochs = 1000;

    std::vector<int> mlp_layers = {13, 13, 13};
    double mlp_lr = 0.3;
    double mlp_momentum = 0.2;
    int mlp_epochs = 500;
};

// Kind-appropriate defaults (forest trees grow to min leaf 1).
ClassifierSpec make_spec(ClassifierKind kind, std::uint64_t seed = 1);

struct Scaler {
    std::vector<double> lo;
    std::vector<double> hi;

    void fit(const data::Dataset& ds);
    std::vector<double> apply(const std::vector<double>& values) const;
};

struct TreeNode {
    int attr = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p_defective = 0.0;
};

struct TreeModel {
    std::vector<TreeNode> nodes;
    double predict(const std::vector<double>& values) const;
};

struct ForestModel {
    std::vector<TreeModel> trees;
};

struct NbModel {
    double log_prior_defective = 0.0;
    double log_prior_clean = 0.0;
    std::vector<double> mean_defective, var_defective;
    std::vector<double> mean_clean, var_clean;
};

struct KnnModel {
    int k = 1;
    std::vector<std::vector<double>> points; // scaled
    std::vector<int> labels;                 // 1 = defective
};

struct LinearModel { // logreg and svm share the shape
    std::vector<double> weights;
    double bias = 0.0;
};

struct MlpModel {
    std::vector<int> layers;                           // hidden sizes + [1]
    std::vector<std::vector<std::vector<double>>> w;   // [layer][out][in]
    std::vector<std::vector<double>> b;                // [layer][out]
};

class Model {
public:
    Model() = default;

    const ClassifierSpec& spec() const { return spec_; }
    const std::vector<std::string>& schema() const { return schema_; }
    const Scaler& scaler() const { return scaler_; }

    // Probability of class "defective"; throws SchemaMismatch on a vector of
    // the wrong width.
    double predict_proba(const std::vector<double>& values) const;
    label::Label predict(const std::vector<double>& values) const;

    nlohmann::json to_json() const;
    static Model from_json(const nlohmann::json& j);

    ClassifierSpec spec_;
    std::vector<std::string> schema_;
    Scaler scaler_;
    std::variant<TreeModel, ForestModel, NbModel, KnnModel, LinearModel, MlpModel>
        params_;
};

// Deterministic given spec.seed. Throws SingleClassTraining when only one
// class is present.
Model train(const ClassifierSpec& spec, const data::Dataset& train_set);

namespace detail {

// Full-batch logistic loss and gradient at (w, b); used by training and by
// the finite-difference checks.
double logreg_loss_grad(const std::vector<std::vector<double>>& x,
                        const std::vector<int>& y, const std::vector<double>& w,
                        double b, double l2, std::vector<double>& grad_w,
                        double& grad_b);

// Mean squared-error loss and gradient of an MLP over a batch.
double mlp_loss_grad(const MlpModel& net, const std::vector<std::vector<double>>& x,
                     const std::vector<int>& y, MlpModel& grad);

double sigmoid(double z);

} // namespace detail

} // namespace featforge::learn
