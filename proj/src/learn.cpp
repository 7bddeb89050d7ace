#include <featforge/learn.hpp>

#include <featforge/errors.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace featforge::learn {

namespace {

constexpr double kVarianceFloor = 1e-9;

struct Matrix {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels; // 1 = defective
};

Matrix raw_matrix(const data::Dataset& ds) {
    Matrix m;
    m.rows.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) {
        m.rows.push_back(inst.values);
        m.labels.push_back(inst.label == label::Label::defective ? 1 : 0);
    }
    return m;
}

Matrix scaled_matrix(const data::Dataset& ds, const Scaler& scaler) {
    Matrix m;
    m.rows.reserve(ds.instances.size());
    for (const auto& inst : ds.instances) {
        m.rows.push_back(scaler.apply(inst.values));
        m.labels.push_back(inst.label == label::Label::defective ? 1 : 0);
    }
    return m;
}

double entropy(long defective, long total) {
    if (total == 0)
        return 0.0;
    double p = static_cast<double>(defective) / static_cast<double>(total);
    double h = 0.0;
    if (p > 0.0)
        h -= p * std::log2(p);
    if (p < 1.0)
        h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

// ---------------------------------------------------------------------------
// Decision tree (gain-ratio splits on numeric attributes)
// ---------------------------------------------------------------------------

struct TreeBuilder {
    const Matrix& m;
    int min_leaf;
    int attr_subset; // 0 = all attributes at every split
    std::mt19937_64* rng = nullptr;
    TreeModel model;

    int build(std::vector<size_t> rows) {
        long defective = 0;
        for (size_t r : rows)
            defective += m.labels[r];
        long total = static_cast<long>(rows.size());

        TreeNode node;
        node.p_defective =
            total > 0 ? static_cast<double>(defective) / static_cast<double>(total) : 0.0;
        int index = static_cast<int>(model.nodes.size());
        model.nodes.push_back(node);

        if (defective == 0 || defective == total ||
            total < 2 * static_cast<long>(min_leaf))
            return index;

        size_t n_attrs = m.rows.empty() ? 0 : m.rows[0].size();
        std::vector<int> candidates(n_attrs);
        std::iota(candidates.begin(), candidates.end(), 0);
        if (attr_subset > 0 && static_cast<size_t>(attr_subset) < n_attrs && rng) {
            std::vector<int> chosen;
            std::vector<int> pool = candidates;
            for (int i = 0; i < attr_subset; ++i) {
                std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
                size_t j = pick(*rng);
                chosen.push_back(pool[j]);
                pool.erase(pool.begin() + static_cast<long>(j));
            }
            std::sort(chosen.begin(), chosen.end());
            candidates = std::move(chosen);
        }

        double parent_entropy = entropy(defective, total);
        double best_ratio = 0.0;
        int best_attr = -1;
        double best_threshold = 0.0;

        for (int attr : candidates) {
            std::vector<std::pair<double, int>> sorted;
            sorted.reserve(rows.size());
            for (size_t r : rows)
                sorted.push_back({m.rows[r][static_cast<size_t>(attr)], m.labels[r]});
            std::sort(sorted.begin(), sorted.end());

            long left_def = 0;
            long left_n = 0;
            for (size_t i = 0; i + 1 < sorted.size(); ++i) {
                left_def += sorted[i].second;
                ++left_n;
                if (sorted[i].first == sorted[i + 1].first)
                    continue;
                long right_n = total - left_n;
                if (left_n < min_leaf || right_n < min_leaf)
                    continue;
                double gain =
                    parent_entropy -
                    (static_cast<double>(left_n) / total) * entropy(left_def, left_n) -
                    (static_cast<double>(right_n) / total) *
                        entropy(defective - left_def, right_n);
                if (gain <= 1e-12)
                    continue;
                double pl = static_cast<double>(left_n) / total;
                double split_info = -pl * std::log2(pl) - (1 - pl) * std::log2(1 - pl);
                if (split_info <= 0.0)
                    continue;
                double ratio = gain / split_info;
                if (ratio > best_ratio + 1e-12) {
                    best_ratio = ratio;
                    best_attr = attr;
                    best_threshold = (sorted[i].first + sorted[i + 1].first) / 2.0;
                }
            }
        }

        if (best_attr < 0)
            return index;

        std::vector<size_t> left_rows, right_rows;
        for (size_t r : rows) {
            if (m.rows[r][static_cast<size_t>(best_attr)] <= best_threshold)
                left_rows.push_back(r);
            else
                right_rows.push_back(r);
        }
        model.nodes[static_cast<size_t>(index)].attr = best_attr;
        model.nodes[static_cast<size_t>(index)].threshold = best_threshold;
        int left = build(std::move(left_rows));
        int right = build(std::move(right_rows));
        model.nodes[static_cast<size_t>(index)].left = left;
        model.nodes[static_cast<size_t>(index)].right = right;
        return index;
    }
};

TreeModel train_tree(const Matrix& m, int min_leaf, int attr_subset,
                     std::mt19937_64* rng, const std::vector<size_t>& rows) {
    TreeBuilder builder{m, min_leaf, attr_subset, rng, {}};
    builder.build(rows);
    return std::move(builder.model);
}

std::vector<size_t> all_rows(size_t n) {
    std::vector<size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    return rows;
}

ForestModel train_forest(const ClassifierSpec& spec, const Matrix& m) {
    ForestModel forest;
    size_t n = m.rows.size();
    size_t n_attrs = m.rows.empty() ? 0 : m.rows[0].size();
    int subset = spec.forest_attr_subset;
    if (subset < 0)
        subset = static_cast<int>(std::floor(std::log2(std::max<size_t>(n_attrs, 1)))) + 1;

    std::mt19937_64 seeder(spec.seed);
    std::vector<std::uint64_t> tree_seeds;
    for (int t = 0; t < spec.forest_trees; ++t)
        tree_seeds.push_back(seeder());

    for (int t = 0; t < spec.forest_trees; ++t) {
        std::mt19937_64 rng(tree_seeds[static_cast<size_t>(t)]);
        std::vector<size_t> rows;
        if (spec.forest_bootstrap) {
            std::uniform_int_distribution<size_t> pick(0, n - 1);
            rows.reserve(n);
            for (size_t i = 0; i < n; ++i)
                rows.push_back(pick(rng));
        } else {
            rows = all_rows(n);
        }
        forest.trees.push_back(train_tree(m, spec.tree_min_leaf, subset, &rng, rows));
    }
    return forest;
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes
// ---------------------------------------------------------------------------

NbModel train_nb(const Matrix& m) {
    NbModel nb;
    size_t dims = m.rows[0].size();
    nb.mean_defective.assign(dims, 0.0);
    nb.mean_clean.assign(dims, 0.0);
    nb.var_defective.assign(dims, 0.0);
    nb.var_clean.assign(dims, 0.0);

    long n_def = 0;
    for (int y : m.labels)
        n_def += y;
    long n_clean = static_cast<long>(m.labels.size()) - n_def;
    nb.log_prior_defective =
        std::log(static_cast<double>(n_def) / static_cast<double>(m.labels.size()));
    nb.log_prior_clean =
        std::log(static_cast<double>(n_clean) / static_cast<double>(m.labels.size()));

    for (size_t i = 0; i < m.rows.size(); ++i) {
        auto& mean = m.labels[i] ? nb.mean_defective : nb.mean_clean;
        for (size_t d = 0; d < dims; ++d)
            mean[d] += m.rows[i][d];
    }
    for (size_t d = 0; d < dims; ++d) {
        nb.mean_defective[d] /= static_cast<double>(n_def);
        nb.mean_clean[d] /= static_cast<double>(n_clean);
    }
    for (size_t i = 0; i < m.rows.size(); ++i) {
        auto& mean = m.labels[i] ? nb.mean_defective : nb.mean_clean;
        auto& var = m.labels[i] ? nb.var_defective : nb.var_clean;
        for (size_t d = 0; d < dims; ++d) {
            double diff = m.rows[i][d] - mean[d];
            var[d] += diff * diff;
        }
    }
    for (size_t d = 0; d < dims; ++d) {
        nb.var_defective[d] =
            std::max(nb.var_defective[d] / static_cast<double>(n_def), kVarianceFloor);
        nb.var_clean[d] =
            std::max(nb.var_clean[d] / static_cast<double>(n_clean), kVarianceFloor);
    }
    return nb;
}

double nb_predict(const NbModel& nb, const std::vector<double>& x) {
    double log_def = nb.log_prior_defective;
    double log_clean = nb.log_prior_clean;
    for (size_t d = 0; d < x.size(); ++d) {
        double dd = x[d] - nb.mean_defective[d];
        log_def += -0.5 * std::log(2.0 * M_PI * nb.var_defective[d]) -
                   dd * dd / (2.0 * nb.var_defective[d]);
        double dc = x[d] - nb.mean_clean[d];
        log_clean += -0.5 * std::log(2.0 * M_PI * nb.var_clean[d]) -
                     dc * dc / (2.0 * nb.var_clean[d]);
    }
    double peak = std::max(log_def, log_clean);
    double e_def = std::exp(log_def - peak);
    double e_clean = std::exp(log_clean - peak);
    return e_def / (e_def + e_clean);
}

// ---------------------------------------------------------------------------
// k-nearest neighbours
// ---------------------------------------------------------------------------

double knn_predict(const KnnModel& knn, const std::vector<double>& x) {
    std::vector<std::pair<double, size_t>> dist;
    dist.reserve(knn.points.size());
    for (size_t i = 0; i < knn.points.size(); ++i) {
        double d2 = 0.0;
        for (size_t d = 0; d < x.size(); ++d) {
            double diff = knn.points[i][d] - x[d];
            d2 += diff * diff;
        }
        dist.push_back({d2, i}); // index breaks distance ties
    }
    size_t k = std::min<size_t>(static_cast<size_t>(knn.k), dist.size());
    std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(k), dist.end());
    long defective = 0;
    for (size_t i = 0; i < k; ++i)
        defective += knn.labels[dist[i].second];
    return static_cast<double>(defective) / static_cast<double>(k);
}

// ---------------------------------------------------------------------------
// Logistic regression (batch gradient descent)
// ---------------------------------------------------------------------------

LinearModel train_logreg(const ClassifierSpec& spec, const Matrix& m) {
    size_t dims = m.rows[0].size();
    LinearModel model;
    model.weights.assign(dims, 0.0);
    std::vector<double> grad(dims, 0.0);
    double grad_b = 0.0;
    for (int epoch = 0; epoch < spec.logreg_epochs; ++epoch) {
        detail::logreg_loss_grad(m.rows, m.labels, model.weights, model.bias,
                                 spec.logreg_l2, grad, grad_b);
        for (size_t d = 0; d < dims; ++d)
            model.weights[d] -= spec.logreg_lr * grad[d];
        model.bias -= spec.logreg_lr * grad_b;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Linear SVM (full-batch Pegasos subgradient descent)
// ---------------------------------------------------------------------------

LinearModel train_svm(const ClassifierSpec& spec, const Matrix& m) {
    size_t dims = m.rows[0].size();
    size_t n = m.rows.size();
    double lambda = 1.0 / (spec.svm_c * static_cast<double>(n));
    LinearModel model;
    model.weights.assign(dims, 0.0);

    for (int t = 1; t <= spec.svm_epochs; ++t) {
        double eta = 1.0 / (lambda * static_cast<double>(t));
        std::vector<double> push(dims, 0.0);
        double push_b = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double y = m.labels[i] ? 1.0 : -1.0;
            double margin = model.bias;
            for (size_t d = 0; d < dims; ++d)
                margin += model.weights[d] * m.rows[i][d];
            if (y * margin < 1.0) {
                for (size_t d = 0; d < dims; ++d)
                    push[d] += y * m.rows[i][d];
                push_b += y;
            }
        }
        double shrink = 1.0 - eta * lambda;
        for (size_t d = 0; d < dims; ++d)
            model.weights[d] =
                shrink * model.weights[d] + eta / static_cast<double>(n) * push[d];
        model.bias += eta / static_cast<double>(n) * push_b;
    }
    return model;
}

// ---------------------------------------------------------------------------
// Multilayer perceptron (sigmoid units, squared error, momentum)
// ---------------------------------------------------------------------------

MlpModel init_mlp(const ClassifierSpec& spec, size_t inputs) {
    MlpModel net;
    net.layers = spec.mlp_layers;
    net.layers.push_back(1);
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> weight(-0.5, 0.5);
    size_t fan_in = inputs;
    for (int width : net.layers) {
        std::vector<std::vector<double>> w(static_cast<size_t>(width));
        std::vector<double> b(static_cast<size_t>(width));
        for (auto& row : w) {
            row.resize(fan_in);
            for (auto& v : row)
                v = weight(rng);
        }
        for (auto& v : b)
            v = weight(rng);
        net.w.push_back(std::move(w));
        net.b.push_back(std::move(b));
        fan_in = static_cast<size_t>(width);
    }
    return net;
}

std::vector<std::vector<double>> mlp_forward(const MlpModel& net,
                                             const std::vector<double>& x) {
    std::vector<std::vector<double>> activations;
    activations.push_back(x);
    for (size_t l = 0; l < net.w.size(); ++l) {
        const auto& prev = activations.back();
        std::vector<double> out(net.w[l].size());
        for (size_t j = 0; j < net.w[l].size(); ++j) {
            double z = net.b[l][j];
            for (size_t i = 0; i < prev.size(); ++i)
                z += net.w[l][j][i] * prev[i];
            out[j] = detail::sigmoid(z);
        }
        activations.push_back(std::move(out));
    }
    return activations;
}

// Backpropagates 0.5*(o-y)^2 for one sample into grad (accumulated).
void mlp_backward(const MlpModel& net,
                  const std::vector<std::vector<double>>& activations, double target,
                  MlpModel& grad) {
    size_t layers = net.w.size();
    std::vector<std::vector<double>> delta(layers);
    {
        double o = activations.back()[0];
        delta[layers - 1] = {(o - target) * o * (1.0 - o)};
    }
    for (size_t l = layers - 1; l-- > 0;) {
        const auto& next_w = net.w[l + 1];
        const auto& act = activations[l + 1];
        delta[l].assign(net.w[l].size(), 0.0);
        for (size_t j = 0; j < delta[l].size(); ++j) {
            double sum = 0.0;
            for (size_t k = 0; k < delta[l + 1].size(); ++k)
                sum += next_w[k][j] * delta[l + 1][k];
            delta[l][j] = sum * act[j] * (1.0 - act[j]);
        }
    }
    for (size_t l = 0; l < layers; ++l) {
        for (size_t j = 0; j < net.w[l].size(); ++j) {
            grad.b[l][j] += delta[l][j];
            for (size_t i = 0; i < net.w[l][j].size(); ++i)
                grad.w[l][j][i] += delta[l][j] * activations[l][i];
        }
    }
}

MlpModel zero_like(const MlpModel& net) {
    MlpModel z = net;
    for (auto& layer : z.w)
        for (auto& row : layer)
            std::fill(row.begin(), row.end(), 0.0);
    for (auto& layer : z.b)
        std::fill(layer.begin(), layer.end(), 0.0);
    return z;
}

MlpModel train_mlp(const ClassifierSpec& spec, const Matrix& m) {
    MlpModel net = init_mlp(spec, m.rows[0].size());
    MlpModel velocity = zero_like(net);

    for (int epoch = 0; epoch < spec.mlp_epochs; ++epoch) {
        for (size_t i = 0; i < m.rows.size(); ++i) {
            auto activations = mlp_forward(net, m.rows[i]);
            MlpModel grad = zero_like(net);
            mlp_backward(net, activations, static_cast<double>(m.labels[i]), grad);
            for (size_t l = 0; l < net.w.size(); ++l) {
                for (size_t j = 0; j < net.w[l].size(); ++j) {
                    double db = -spec.mlp_lr * grad.b[l][j] +
                                spec.mlp_momentum * velocity.b[l][j];
                    velocity.b[l][j] = db;
                    net.b[l][j] += db;
                    for (size_t c = 0; c < net.w[l][j].size(); ++c) {
                        double dw = -spec.mlp_lr * grad.w[l][j][c] +
                                    spec.mlp_momentum * velocity.w[l][j][c];
                        velocity.w[l][j][c] = dw;
                        net.w[l][j][c] += dw;
                    }
                }
            }
        }
    }
    return net;
}

} // namespace

// ---------------------------------------------------------------------------
// Public surface
// ---------------------------------------------------------------------------

ClassifierKind kind_from_string(const std::string& s) {
    if (s == "tree" || s == "j48")
        return ClassifierKind::tree;
    if (s == "forest" || s == "rf")
        return ClassifierKind::forest;
    if (s == "nb")
        return ClassifierKind::nb;
    if (s == "knn")
        return ClassifierKind::knn;
    if (s == "logreg" || s == "lr")
        return ClassifierKind::logreg;
    if (s == "svm")
        return ClassifierKind::svm;
    if (s == "mlp" || s == "nn")
        return ClassifierKind::mlp;
    throw ConfigError("unknown classifier: " + s);
}

std::string to_string(ClassifierKind kind) {
    switch (kind) {
    case ClassifierKind::tree:
        return "tree";
    case ClassifierKind::forest:
        return "forest";
    case ClassifierKind::nb:
        return "nb";
    case ClassifierKind::knn:
        return "knn";
    case ClassifierKind::logreg:
        return "logreg";
    case ClassifierKind::svm:
        return "svm";
    case ClassifierKind::mlp:
        return "mlp";
    }
    return "forest";
}

const std::vector<ClassifierKind>& all_kinds() {
    static const std::vector<ClassifierKind> kinds = {
        ClassifierKind::tree, ClassifierKind::forest, ClassifierKind::nb,
        ClassifierKind::knn,  ClassifierKind::logreg, ClassifierKind::svm,
        ClassifierKind::mlp};
    return kinds;
}

ClassifierSpec make_spec(ClassifierKind kind, std::uint64_t seed) {
    ClassifierSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    spec.tree_min_leaf = kind == ClassifierKind::tree ? 2 : 1;
    return spec;
}

void Scaler::fit(const data::Dataset& ds) {
    size_t dims = ds.attributes.size();
    lo.assign(dims, 0.0);
    hi.assign(dims, 0.0);
    if (ds.instances.empty())
        return;
    for (size_t d = 0; d < dims; ++d) {
        lo[d] = hi[d] = ds.instances[0].values[d];
        for (const auto& inst : ds.instances) {
            lo[d] = std::min(lo[d], inst.values[d]);
            hi[d] = std::max(hi[d], inst.values[d]);
        }
    }
}

std::vector<double> Scaler::apply(const std::vector<double>& values) const {
    std::vector<double> out(values.size());
    for (size_t d = 0; d < values.size(); ++d) {
        double range = hi[d] - lo[d];
        out[d] = range > 0.0 ? (values[d] - lo[d]) / range : 0.0;
    }
    return out;
}

double TreeModel::predict(const std::vector<double>& values) const {
    int index = 0;
    while (nodes[static_cast<size_t>(index)].attr >= 0) {
        const auto& node = nodes[static_cast<size_t>(index)];
        index = values[static_cast<size_t>(node.attr)] <= node.threshold ? node.left
                                                                         : node.right;
    }
    return nodes[static_cast<size_t>(index)].p_defective;
}

double Model::predict_proba(const std::vector<double>& values) const {
    if (values.size() != schema_.size())
        throw SchemaMismatch("query vector width " + std::to_string(values.size()) +
                             " does not match model schema " +
                             std::to_string(schema_.size()));
    switch (spec_.kind) {
    case ClassifierKind::tree:
        return std::get<TreeModel>(params_).predict(values);
    case ClassifierKind::forest: {
        const auto& forest = std::get<ForestModel>(params_);
        double sum = 0.0;
        for (const auto& tree : forest.trees)
            sum += tree.predict(values);
        return sum / static_cast<double>(forest.trees.size());
    }
    case ClassifierKind::nb:
        return nb_predict(std::get<NbModel>(params_), values);
    case ClassifierKind::knn:
        return knn_predict(std::get<KnnModel>(params_), scaler_.apply(values));
    case ClassifierKind::logreg:
    case ClassifierKind::svm: {
        const auto& lin = std::get<LinearModel>(params_);
        auto x = scaler_.apply(values);
        double z = lin.bias;
        for (size_t d = 0; d < x.size(); ++d)
            z += lin.weights[d] * x[d];
        return detail::sigmoid(z);
    }
    case ClassifierKind::mlp: {
        auto activations = mlp_forward(std::get<MlpModel>(params_), scaler_.apply(values));
        return activations.back()[0];
    }
    }
    return 0.0;
}

label::Label Model::predict(const std::vector<double>& values) const {
    return predict_proba(values) >= 0.5 ? label::Label::defective : label::Label::clean;
}

Model train(const ClassifierSpec& spec, const data::Dataset& train_set) {
    if (train_set.instances.empty())
        throw SingleClassTraining("empty training set");
    long defective = train_set.count(label::Label::defective);
    if (defective == 0 || defective == static_cast<long>(train_set.instances.size()))
        throw SingleClassTraining("training set contains a single class");

    Model model;
    model.spec_ = spec;
    model.schema_ = train_set.attributes;
    model.scaler_.fit(train_set);

    switch (spec.kind) {
    case ClassifierKind::tree: {
        Matrix m = raw_matrix(train_set);
        model.params_ = train_tree(m, spec.tree_min_leaf, 0, nullptr,
                                   all_rows(m.rows.size()));
        break;
    }
    case ClassifierKind::forest: {
        Matrix m = raw_matrix(train_set);
        model.params_ = train_forest(spec, m);
        break;
    }
    case ClassifierKind::nb: {
        Matrix m = raw_matrix(train_set);
        model.params_ = train_nb(m);
        break;
    }
    case ClassifierKind::knn: {
        Matrix m = scaled_matrix(train_set, model.scaler_);
        KnnModel knn;
        knn.k = spec.knn_k;
        knn.points = std::move(m.rows);
        knn.labels = std::move(m.labels);
        model.params_ = std::move(knn);
        break;
    }
    case ClassifierKind::logreg: {
        Matrix m = scaled_matrix(train_set, model.scaler_);
        model.params_ = train_logreg(spec, m);
        break;
    }
    case ClassifierKind::svm: {
        Matrix m = scaled_matrix(train_set, model.scaler_);
        model.params_ = train_svm(spec, m);
        break;
    }
    case ClassifierKind::mlp: {
        Matrix m = scaled_matrix(train_set, model.scaler_);
        model.params_ = train_mlp(spec, m);
        break;
    }
    }
    return model;
}

namespace detail {

double sigmoid(double z) {
    if (z >= 0.0)
        return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logreg_loss_grad(const std::vector<std::vector<double>>& x,
                        const std::vector<int>& y, const std::vector<double>& w,
                        double b, double l2, std::vector<double>& grad_w,
                        double& grad_b) {
    size_t n = x.size();
    size_t dims = w.size();
    std::fill(grad_w.begin(), grad_w.end(), 0.0);
    grad_b = 0.0;
    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double z = b;
        for (size_t d = 0; d < dims; ++d)
            z += w[d] * x[i][d];
        double p = sigmoid(z);
        double target = static_cast<double>(y[i]);
        // Numerically safe cross-entropy via log1p of the margin.
        loss += z > 0 ? (1.0 - target) * z + std::log1p(std::exp(-z))
                      : -target * z + std::log1p(std::exp(z));
        double err = p - target;
        for (size_t d = 0; d < dims; ++d)
            grad_w[d] += err * x[i][d];
        grad_b += err;
    }
    loss /= static_cast<double>(n);
    grad_b /= static_cast<double>(n);
    for (size_t d = 0; d < dims; ++d) {
        grad_w[d] = grad_w[d] / static_cast<double>(n) + l2 * w[d];
        loss += 0.5 * l2 * w[d] * w[d];
    }
    return loss;
}

double mlp_loss_grad(const MlpModel& net, const std::vector<std::vector<double>>& x,
                     const std::vector<int>& y, MlpModel& grad) {
    grad = zero_like(net);
    double loss = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        auto activations = mlp_forward(net, x[i]);
        double o = activations.back()[0];
        double target = static_cast<double>(y[i]);
        loss += 0.5 * (o - target) * (o - target);
        mlp_backward(net, activations, target, grad);
    }
    double inv = 1.0 / static_cast<double>(x.size());
    for (auto& layer : grad.w)
        for (auto& row : layer)
            for (auto& v : row)
                v *= inv;
    for (auto& layer : grad.b)
        for (auto& v : layer)
            v *= inv;
    return loss * inv;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

json spec_to_json(const ClassifierSpec& spec) {
    return json{{"kind", to_string(spec.kind)},
                {"seed", spec.seed},
                {"tree_min_leaf", spec.tree_min_leaf},
                {"forest_trees", spec.forest_trees},
                {"forest_bootstrap", spec.forest_bootstrap},
                {"forest_attr_subset", spec.forest_attr_subset},
                {"knn_k", spec.knn_k},
                {"logreg_lr", spec.logreg_lr},
                {"logreg_epochs", spec.logreg_epochs},
                {"logreg_l2", spec.logreg_l2},
                {"svm_c", spec.svm_c},
                {"svm_epochs", spec.svm_epochs},
                {"mlp_layers", spec.mlp_layers},
                {"mlp_lr", spec.mlp_lr},
                {"mlp_momentum", spec.mlp_momentum},
                {"mlp_epochs", spec.mlp_epochs}};
}

ClassifierSpec spec_from_json(const json& j) {
    ClassifierSpec spec;
    spec.kind = kind_from_string(j.at("kind").get<std::string>());
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.tree_min_leaf = j.at("tree_min_leaf").get<int>();
    spec.forest_trees = j.at("forest_trees").get<int>();
    spec.forest_bootstrap = j.at("forest_bootstrap").get<bool>();
    spec.forest_attr_subset = j.at("forest_attr_subset").get<int>();
    spec.knn_k = j.at("knn_k").get<int>();
    spec.logreg_lr = j.at("logreg_lr").get<double>();
    spec.logreg_epochs = j.at("logreg_epochs").get<int>();
    spec.logreg_l2 = j.at("logreg_l2").get<double>();
    spec.svm_c = j.at("svm_c").get<double>();
    spec.svm_epochs = j.at("svm_epochs").get<int>();
    spec.mlp_layers = j.at("mlp_layers").get<std::vector<int>>();
    spec.mlp_lr = j.at("mlp_lr").get<double>();
    spec.mlp_momentum = j.at("mlp_momentum").get<double>();
    spec.mlp_epochs = j.at("mlp_epochs").get<int>();
    return spec;
}

json tree_to_json(const TreeModel& tree) {
    json nodes = json::array();
    for (const auto& n : tree.nodes)
        nodes.push_back(json::array({n.attr, n.threshold, n.left, n.right, n.p_defective}));
    return nodes;
}

TreeModel tree_from_json(const json& j) {
    TreeModel tree;
    for (const auto& n : j) {
        TreeNode node;
        node.attr = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.p_defective = n.at(4).get<double>();
        tree.nodes.push_back(node);
    }
    return tree;
}

} // namespace

nlohmann::json Model::to_json() const {
    json params;
    switch (spec_.kind) {
    case ClassifierKind::tree:
        params = tree_to_json(std::get<TreeModel>(params_));
        break;
    case ClassifierKind::forest: {
        params = json::array();
        for (const auto& tree : std::get<ForestModel>(params_).trees)
            params.push_back(tree_to_json(tree));
        break;
    }
    case ClassifierKind::nb: {
        const auto& nb = std::get<NbModel>(params_);
        params = json{{"log_prior_defective", nb.log_prior_defective},
                      {"log_prior_clean", nb.log_prior_clean},
                      {"mean_defective", nb.mean_defective},
                      {"var_defective", nb.var_defective},
                      {"mean_clean", nb.mean_clean},
                      {"var_clean", nb.var_clean}};
        break;
    }
    case ClassifierKind::knn: {
        const auto& knn = std::get<KnnModel>(params_);
        params = json{{"k", knn.k}, {"points", knn.points}, {"labels", knn.labels}};
        break;
    }
    case ClassifierKind::logreg:
    case ClassifierKind::svm: {
        const auto& lin = std::get<LinearModel>(params_);
        params = json{{"weights", lin.weights}, {"bias", lin.bias}};
        break;
    }
    case ClassifierKind::mlp: {
        const auto& mlp = std::get<MlpModel>(params_);
        params = json{{"layers", mlp.layers}, {"w", mlp.w}, {"b", mlp.b}};
        break;
    }
    }
    return json{{"version", 1},
                {"spec", spec_to_json(spec_)},
                {"schema", schema_},
                {"scaler", json{{"lo", scaler_.lo}, {"hi", scaler_.hi}}},
                {"params", std::move(params)}};
}

Model Model::from_json(const nlohmann::json& j) {
    if (j.at("version").get<int>() != 1)
        throw SchemaMismatch("unsupported model version");
    Model model;
    model.spec_ = spec_from_json(j.at("spec"));
    model.schema_ = j.at("schema").get<std::vector<std::string>>();
    model.scaler_.lo = j.at("scaler").at("lo").get<std::vector<double>>();
    model.scaler_.hi = j.at("scaler").at("hi").get<std::vector<double>>();
    const auto& params = j.at("params");
    switch (model.spec_.kind) {
    case ClassifierKind::tree:
        model.params_ = tree_from_json(params);
        break;
    case ClassifierKind::forest: {
        ForestModel forest;
        for (const auto& t : params)
            forest.trees.push_back(tree_from_json(t));
        model.params_ = std::move(forest);
        break;
    }
    case ClassifierKind::nb: {
        NbModel nb;
        nb.log_prior_defective = params.at("log_prior_defective").get<double>();
        nb.log_prior_clean = params.at("log_prior_clean").get<double>();
        nb.mean_defective = params.at("mean_defective").get<std::vector<double>>();
        nb.var_defective = params.at("var_defective").get<std::vector<double>>();
        nb.mean_clean = params.at("mean_clean").get<std::vector<double>>();
        nb.var_clean = params.at("var_clean").get<std::vector<double>>();
        model.params_ = std::move(nb);
        break;
    }
    case ClassifierKind::knn: {
        KnnModel knn;
        knn.k = params.at("k").get<int>();
        knn.points = params.at("points").get<std::vector<std::vector<double>>>();
        knn.labels = params.at("labels").get<std::vector<int>>();
        model.params_ = std::move(knn);
        break;
    }
    case ClassifierKind::logreg:
    case ClassifierKind::svm: {
        LinearModel lin;
        lin.weights = params.at("weights").get<std::vector<double>>();
        lin.bias = params.at("bias").get<double>();
        model.params_ = std::move(lin);
        break;
    }
    case ClassifierKind::mlp: {
        MlpModel mlp;
        mlp.layers = params.at("layers").get<std::vector<int>>();
        mlp.w = params.at("w").get<std::vector<std::vector<std::vector<double>>>>();
        mlp.b = params.at("b").get<std::vector<std::vector<double>>>();
        model.params_ = std::move(mlp);
        break;
    }
    }
    return model;
}

} // namespace featforge::learn
