#include "synthtab/utility_eval.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include <nlohmann/json.hpp>

#include "synthtab/errors.hpp"

namespace synthtab {

namespace {

struct FeatureMatrix {
    size_t rows = 0;
    size_t dims = 0;
    std::vector<double> data; // row-major

    double at(size_t r, size_t d) const { return data[r * dims + d]; }
};

FeatureMatrix extract_features(const DataTable& table, const std::string& target) {
    FeatureMatrix m;
    m.rows = table.rows();
    std::vector<size_t> cols;
    for (size_t ci = 0; ci < table.schema.size(); ++ci) {
        if (table.schema.columns[ci].kind == ColumnKind::Continuous &&
            table.schema.columns[ci].name != target) {
            cols.push_back(ci);
        }
    }
    m.dims = cols.size();
    if (m.dims == 0) throw ValidationError("fit_predict: no continuous feature columns");
    m.data.resize(m.rows * m.dims);
    for (size_t r = 0; r < m.rows; ++r) {
        for (size_t d = 0; d < m.dims; ++d) m.data[r * m.dims + d] = table.reals[cols[d]][r];
    }
    return m;
}

void zscore_fit_apply(FeatureMatrix& train, FeatureMatrix& test) {
    for (size_t d = 0; d < train.dims; ++d) {
        double mean = 0.0;
        for (size_t r = 0; r < train.rows; ++r) mean += train.at(r, d);
        mean /= static_cast<double>(train.rows);
        double ss = 0.0;
        for (size_t r = 0; r < train.rows; ++r) {
            const double dv = train.at(r, d) - mean;
            ss += dv * dv;
        }
        double std = std::sqrt(ss / static_cast<double>(train.rows));
        if (std <= 0.0) std = 1.0;
        for (size_t r = 0; r < train.rows; ++r) {
            train.data[r * train.dims + d] = (train.at(r, d) - mean) / std;
        }
        for (size_t r = 0; r < test.rows; ++r) {
            test.data[r * test.dims + d] = (test.at(r, d) - mean) / std;
        }
    }
}

int majority_class(std::span<const size_t> counts) {
    size_t best = 0;
    for (size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c; // ties keep the lowest code
    }
    return static_cast<int>(best);
}

std::vector<int> knn_predict(const FeatureMatrix& train, std::span<const int> labels,
                             const FeatureMatrix& test, size_t k, size_t n_classes) {
    const size_t kk = std::min(k, train.rows);
    std::vector<int> out(test.rows);
    std::vector<std::pair<double, size_t>> dist(train.rows);
    for (size_t t = 0; t < test.rows; ++t) {
        const double* q = test.data.data() + t * test.dims;
        for (size_t r = 0; r < train.rows; ++r) {
            const double* p = train.data.data() + r * train.dims;
            double acc = 0.0;
            for (size_t d = 0; d < train.dims; ++d) {
                const double dv = q[d] - p[d];
                acc += dv * dv;
            }
            dist[r] = {acc, r};
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<long>(kk), dist.end());
        std::vector<size_t> votes(n_classes, 0);
        for (size_t i = 0; i < kk; ++i) votes[static_cast<size_t>(labels[dist[i].second])]++;
        out[t] = majority_class(votes);
    }
    return out;
}

// CART with Gini impurity; ties break toward the lowest feature index and
// lowest threshold so training is order-independent and reproducible.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int label = 0;
    std::unique_ptr<TreeNode> left, right;

    bool leaf() const { return feature < 0; }
};

double gini_from_counts(std::span<const size_t> counts, size_t total) {
    if (total == 0) return 0.0;
    double acc = 1.0;
    for (size_t c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        acc -= p * p;
    }
    return acc;
}

std::unique_ptr<TreeNode> build_classification_tree(
    const FeatureMatrix& X, std::span<const int> y, std::vector<size_t>& indices, size_t depth,
    size_t max_depth, size_t min_leaf, size_t n_classes) {
    auto node = std::make_unique<TreeNode>();
    std::vector<size_t> counts(n_classes, 0);
    for (size_t i : indices) counts[static_cast<size_t>(y[i])]++;
    node->label = majority_class(counts);
    const size_t n = indices.size();
    const double parent_gini = gini_from_counts(counts, n);
    if (depth >= max_depth || n < 2 * min_leaf || parent_gini <= 0.0) return node;

    int best_feature = -1;
    double best_threshold = 0.0;
    double best_impurity = parent_gini - 1e-12;
    std::vector<std::pair<double, int>> sorted(n);
    std::vector<size_t> left_counts(n_classes);
    for (size_t f = 0; f < X.dims; ++f) {
        for (size_t i = 0; i < n; ++i) {
            sorted[i] = {X.at(indices[i], f), y[indices[i]]};
        }
        std::sort(sorted.begin(), sorted.end());
        std::fill(left_counts.begin(), left_counts.end(), 0);
        for (size_t i = 0; i + 1 < n; ++i) {
            left_counts[static_cast<size_t>(sorted[i].second)]++;
            if (sorted[i].first == sorted[i + 1].first) continue;
            const size_t nl = i + 1;
            const size_t nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            std::vector<size_t> right_counts(n_classes);
            for (size_t c = 0; c < n_classes; ++c) right_counts[c] = counts[c] - left_counts[c];
            const double impurity =
                (static_cast<double>(nl) * gini_from_counts(left_counts, nl) +
                 static_cast<double>(nr) * gini_from_counts(right_counts, nr)) /
                static_cast<double>(n);
            if (impurity < best_impurity) {
                best_impurity = impurity;
                best_feature = static_cast<int>(f);
                best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
            }
        }
    }
    if (best_feature < 0) return node;

    std::vector<size_t> left_idx, right_idx;
    for (size_t i : indices) {
        if (X.at(i, static_cast<size_t>(best_feature)) <= best_threshold) {
            left_idx.push_back(i);
        } else {
            right_idx.push_back(i);
        }
    }
    if (left_idx.empty() || right_idx.empty()) return node;
    node->feature = best_feature;
    node->threshold = best_threshold;
    node->left = build_classification_tree(X, y, left_idx, depth + 1, max_depth, min_leaf,
                                           n_classes);
    node->right = build_classification_tree(X, y, right_idx, depth + 1, max_depth, min_leaf,
                                            n_classes);
    return node;
}

int tree_predict_label(const TreeNode* node, const double* x) {
    while (!node->leaf()) {
        node = (x[node->feature] <= node->threshold) ? node->left.get() : node->right.get();
    }
    return node->label;
}

// regression CART on squared error, for the boosted ensemble
struct RegNode {
    int feature = -1;
    double threshold = 0.0;
    double value = 0.0;
    std::unique_ptr<RegNode> left, right;

    bool leaf() const { return feature < 0; }
};

std::unique_ptr<RegNode> build_regression_tree(const FeatureMatrix& X,
                                               std::span<const double> y,
                                               std::vector<size_t>& indices, size_t depth,
                                               size_t max_depth, size_t min_leaf) {
    auto node = std::make_unique<RegNode>();
    const size_t n = indices.size();
    double sum = 0.0;
    for (size_t i : indices) sum += y[i];
    node->value = sum / static_cast<double>(n);
    if (depth >= max_depth || n < 2 * min_leaf) return node;

    double total_sq = 0.0;
    for (size_t i : indices) total_sq += (y[i] - node->value) * (y[i] - node->value);
    if (total_sq <= 1e-12) return node;

    int best_feature = -1;
    double best_threshold = 0.0;
    // maximize SSE reduction = max over splits of (S_l^2/n_l + S_r^2/n_r)
    double best_score = sum * sum / static_cast<double>(n) + 1e-12;
    std::vector<std::pair<double, double>> sorted(n);
    for (size_t f = 0; f < X.dims; ++f) {
        for (size_t i = 0; i < n; ++i) sorted[i] = {X.at(indices[i], f), y[indices[i]]};
        std::sort(sorted.begin(), sorted.end());
        double left_sum = 0.0;
        for (size_t i = 0; i + 1 < n; ++i) {
            left_sum += sorted[i].second;
            if (sorted[i].first == sorted[i + 1].first) continue;
            const size_t nl = i + 1;
            const size_t nr = n - nl;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double right_sum = sum - left_sum;
            const double score = left_sum * left_sum / static_cast<double>(nl) +
                                 right_sum * right_sum / static_cast<double>(nr);
            if (score > best_score) {
                best_score = score;
                best_feature = static_cast<int>(f);
                best_threshold = 0.5 * (sorted[i].first + sorted[i + 1].first);
            }
        }
    }
    if (best_feature < 0) return node;
    std::vector<size_t> left_idx, right_idx;
    for (size_t i : indices) {
        if (X.at(i, static_cast<size_t>(best_feature)) <= best_threshold) {
            left_idx.push_back(i);
        } else {
            right_idx.push_back(i);
        }
    }
    if (left_idx.empty() || right_idx.empty()) return node;
    node->feature = best_feature;
    node->threshold = best_threshold;
    node->left = build_regression_tree(X, y, left_idx, depth + 1, max_depth, min_leaf);
    node->right = build_regression_tree(X, y, right_idx, depth + 1, max_depth, min_leaf);
    return node;
}

double reg_predict(const RegNode* node, const double* x) {
    while (!node->leaf()) {
        node = (x[node->feature] <= node->threshold) ? node->left.get() : node->right.get();
    }
    return node->value;
}

// one-vs-rest squared-error gradient boosting on class indicators
std::vector<int> boosted_predict(const FeatureMatrix& train, std::span<const int> labels,
                                 const FeatureMatrix& test, size_t rounds, size_t depth,
                                 double lr, size_t n_classes) {
    constexpr size_t kBoostMinLeaf = 5;
    const size_t n = train.rows;
    std::vector<double> prior(n_classes, 0.0);
    for (int c : labels) prior[static_cast<size_t>(c)] += 1.0;
    for (double& p : prior) p /= static_cast<double>(n);

    std::vector<std::vector<double>> f_train(n_classes, std::vector<double>(n));
    std::vector<std::vector<double>> f_test(n_classes, std::vector<double>(test.rows));
    for (size_t c = 0; c < n_classes; ++c) {
        std::fill(f_train[c].begin(), f_train[c].end(), prior[c]);
        std::fill(f_test[c].begin(), f_test[c].end(), prior[c]);
    }

    std::vector<double> residual(n);
    std::vector<size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (size_t round = 0; round < rounds; ++round) {
        for (size_t c = 0; c < n_classes; ++c) {
            for (size_t i = 0; i < n; ++i) {
                const double target = labels[i] == static_cast<int>(c) ? 1.0 : 0.0;
                residual[i] = target - f_train[c][i];
            }
            std::vector<size_t> idx = all;
            const auto tree = build_regression_tree(train, residual, idx, 0, depth,
                                                    kBoostMinLeaf);
            for (size_t i = 0; i < n; ++i) {
                f_train[c][i] += lr * reg_predict(tree.get(), train.data.data() + i * train.dims);
            }
            for (size_t t = 0; t < test.rows; ++t) {
                f_test[c][t] += lr * reg_predict(tree.get(), test.data.data() + t * test.dims);
            }
        }
    }

    std::vector<int> out(test.rows);
    for (size_t t = 0; t < test.rows; ++t) {
        size_t best = 0;
        for (size_t c = 1; c < n_classes; ++c) {
            if (f_test[c][t] > f_test[best][t]) best = c;
        }
        out[t] = static_cast<int>(best);
    }
    return out;
}

} // namespace

std::string ClassifierSpec::name() const {
    switch (kind) {
        case Kind::Knn: return "knn_k" + std::to_string(knn_k);
        case Kind::DecisionTree:
            return "tree_d" + std::to_string(tree_max_depth) + "_l" + std::to_string(tree_min_leaf);
        case Kind::BoostedTrees:
            return "boost_r" + std::to_string(boost_rounds) + "_d" + std::to_string(boost_depth);
    }
    return "unknown";
}

void ClassifierSpec::validate() const {
    if (kind == Kind::Knn && knn_k < 1) throw ValidationError("classifier: knn k must be >= 1");
    if (kind == Kind::DecisionTree && (tree_max_depth < 1 || tree_min_leaf < 1)) {
        throw ValidationError("classifier: tree hyperparameters must be positive");
    }
    if (kind == Kind::BoostedTrees &&
        (boost_rounds < 1 || boost_depth < 1 || !(boost_learning_rate > 0.0))) {
        throw ValidationError("classifier: boosting hyperparameters must be positive");
    }
}

ClassifierSpec ClassifierSpec::knn(size_t k) {
    ClassifierSpec s;
    s.kind = Kind::Knn;
    s.scaling = FeatureScaling::ZScore;
    s.knn_k = k;
    return s;
}

ClassifierSpec ClassifierSpec::decision_tree(size_t max_depth, size_t min_leaf) {
    ClassifierSpec s;
    s.kind = Kind::DecisionTree;
    s.tree_max_depth = max_depth;
    s.tree_min_leaf = min_leaf;
    return s;
}

ClassifierSpec ClassifierSpec::boosted_trees(size_t rounds, size_t depth, double lr) {
    ClassifierSpec s;
    s.kind = Kind::BoostedTrees;
    s.boost_rounds = rounds;
    s.boost_depth = depth;
    s.boost_learning_rate = lr;
    return s;
}

std::vector<int> fit_predict(const ClassifierSpec& spec, const DataTable& train,
                             const DataTable& test, const std::string& target) {
    spec.validate();
    if (!(train.schema == test.schema)) {
        throw ValidationError("fit_predict: train/test schema mismatch");
    }
    const int target_idx = train.schema.index_of(target);
    if (target_idx < 0 || train.schema.columns[target_idx].kind != ColumnKind::Categorical) {
        throw ValidationError("fit_predict: target column " + target + " missing or not categorical");
    }
    if (train.rows() == 0) throw ValidationError("fit_predict: empty training table");

    const auto& labels = train.codes[target_idx];
    size_t n_classes = train.code_maps[target_idx].size();
    for (int c : labels) n_classes = std::max(n_classes, static_cast<size_t>(c) + 1);

    FeatureMatrix ftrain = extract_features(train, target);
    FeatureMatrix ftest = extract_features(test, target);
    if (spec.scaling == FeatureScaling::ZScore) zscore_fit_apply(ftrain, ftest);

    switch (spec.kind) {
        case ClassifierSpec::Kind::Knn:
            return knn_predict(ftrain, labels, ftest, spec.knn_k, n_classes);
        case ClassifierSpec::Kind::DecisionTree: {
            std::vector<size_t> indices(ftrain.rows);
            std::iota(indices.begin(), indices.end(), 0);
            const auto tree = build_classification_tree(ftrain, labels, indices, 0,
                                                        spec.tree_max_depth, spec.tree_min_leaf,
                                                        n_classes);
            std::vector<int> out(ftest.rows);
            for (size_t t = 0; t < ftest.rows; ++t) {
                out[t] = tree_predict_label(tree.get(), ftest.data.data() + t * ftest.dims);
            }
            return out;
        }
        case ClassifierSpec::Kind::BoostedTrees:
            return boosted_predict(ftrain, labels, ftest, spec.boost_rounds, spec.boost_depth,
                                   spec.boost_learning_rate, n_classes);
    }
    throw ValidationError("fit_predict: unknown classifier kind");
}

ClassificationReport evaluate(std::span<const int> predictions, std::span<const int> truth,
                              const std::vector<std::string>& class_labels) {
    if (predictions.size() != truth.size()) {
        throw ValidationError("evaluate: prediction/truth length mismatch");
    }
    if (truth.empty()) throw ValidationError("evaluate: empty inputs");
    size_t n_classes = class_labels.size();
    for (int c : truth) n_classes = std::max(n_classes, static_cast<size_t>(c) + 1);
    for (int c : predictions) n_classes = std::max(n_classes, static_cast<size_t>(c) + 1);

    ClassificationReport report;
    report.total = truth.size();
    report.confusion.assign(n_classes, std::vector<size_t>(n_classes, 0));
    size_t correct = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        report.confusion[static_cast<size_t>(truth[i])][static_cast<size_t>(predictions[i])]++;
        if (truth[i] == predictions[i]) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.total);

    for (size_t c = 0; c < n_classes; ++c) {
        ClassMetrics m;
        m.code = static_cast<int>(c);
        m.label = c < class_labels.size() ? class_labels[c] : "class_" + std::to_string(c);
        size_t row_sum = 0, col_sum = 0;
        for (size_t j = 0; j < n_classes; ++j) {
            row_sum += report.confusion[c][j];
            col_sum += report.confusion[j][c];
        }
        const size_t tp = report.confusion[c][c];
        m.support = row_sum;
        m.absent = row_sum == 0;
        m.precision = col_sum ? static_cast<double>(tp) / static_cast<double>(col_sum) : 0.0;
        m.recall = row_sum ? static_cast<double>(tp) / static_cast<double>(row_sum) : 0.0;
        m.f1 = (m.precision + m.recall > 0.0)
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;
        report.per_class.push_back(std::move(m));
    }

    const double nc = static_cast<double>(n_classes);
    for (const auto& m : report.per_class) {
        report.macro_precision += m.precision / nc;
        report.macro_recall += m.recall / nc;
        report.macro_f1 += m.f1 / nc;
        const double w = static_cast<double>(m.support) / static_cast<double>(report.total);
        report.weighted_precision += w * m.precision;
        report.weighted_recall += w * m.recall;
        report.weighted_f1 += w * m.f1;
    }
    return report;
}

namespace {

UtilityRun run_specs(const DataTable& train, const DataTable& test,
                     std::span<const ClassifierSpec> specs, const std::string& target) {
    if (specs.empty()) throw ValidationError("utility: no classifier specs given");
    const int target_idx = test.schema.index_of(target);
    if (target_idx < 0) throw ValidationError("utility: target column missing: " + target);
    UtilityRun run;
    for (const auto& spec : specs) {
        const std::vector<int> preds = fit_predict(spec, train, test, target);
        UtilityEntry entry;
        entry.spec_name = spec.name();
        entry.report = evaluate(preds, test.codes[target_idx], test.code_maps[target_idx]);
        run.entries.push_back(std::move(entry));
    }
    for (size_t i = 1; i < run.entries.size(); ++i) {
        if (run.entries[i].report.accuracy > run.entries[run.best_index].report.accuracy) {
            run.best_index = i;
        }
    }
    return run;
}

} // namespace

UtilityRun trtr(const DataTable& real_train, const DataTable& real_test,
                std::span<const ClassifierSpec> specs, const std::string& target) {
    return run_specs(real_train, real_test, specs, target);
}

UtilityRun tstr(const DataTable& synth_train, const DataTable& real_test,
                std::span<const ClassifierSpec> specs, const std::string& target) {
    return run_specs(synth_train, real_test, specs, target);
}

nlohmann::json classification_report_to_json(const ClassificationReport& report) {
    nlohmann::json per_class = nlohmann::json::array();
    for (const auto& m : report.per_class) {
        per_class.push_back({{"code", m.code},
                             {"label", m.label},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"support", m.support},
                             {"absent", m.absent}});
    }
    return nlohmann::json{
        {"accuracy", report.accuracy},
        {"total", report.total},
        {"per_class", per_class},
        {"macro", {{"precision", report.macro_precision},
                   {"recall", report.macro_recall},
                   {"f1", report.macro_f1}}},
        {"weighted", {{"precision", report.weighted_precision},
                      {"recall", report.weighted_recall},
                      {"f1", report.weighted_f1}}},
        {"confusion", report.confusion}};
}

nlohmann::json utility_run_to_json(const UtilityRun& run) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& e : run.entries) {
        entries.push_back(
            {{"classifier", e.spec_name}, {"report", classification_report_to_json(e.report)}});
    }
    return nlohmann::json{{"entries", entries},
                          {"best_index", run.best_index},
                          {"best_classifier", run.entries[run.best_index].spec_name},
                          {"best_accuracy", run.entries[run.best_index].report.accuracy}};
}

} // namespace synthtab
