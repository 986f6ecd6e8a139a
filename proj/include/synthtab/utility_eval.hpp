#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "synthtab/data_table.hpp"

namespace synthtab {

enum class FeatureScaling { None, ZScore };

struct ClassifierSpec {
    enum class Kind { Knn, DecisionTree, BoostedTrees };
    Kind kind = Kind::Knn;
    FeatureScaling scaling = FeatureScaling::None;

    size_t knn_k = 5;

    size_t tree_max_depth = 12;
    size_t tree_min_leaf = 4;

    size_t boost_rounds = 40;
    size_t boost_depth = 4;
    double boost_learning_rate = 0.25;

    std::string name() const;
    void validate() const;

    static ClassifierSpec knn(size_t k = 5);
    static ClassifierSpec decision_tree(size_t max_depth = 12, size_t min_leaf = 4);
    static ClassifierSpec boosted_trees(size_t rounds = 40, size_t depth = 4, double lr = 0.25);
};

struct ClassMetrics {
    int code = 0;
    std::string label;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    size_t support = 0;
    bool absent = false; // class never appears in the truth column
};

struct ClassificationReport {
    double accuracy = 0.0;
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    std::vector<std::vector<size_t>> confusion; // [truth][predicted]
    size_t total = 0;
};

// Trains on `train`, predicts the target column of `test`. Features are the
// continuous columns; the target is the categorical column named by
// `target`. Deterministic: all ties break toward the lowest class code.
std::vector<int> fit_predict(const ClassifierSpec& spec, const DataTable& train,
                             const DataTable& test, const std::string& target);

ClassificationReport evaluate(std::span<const int> predictions, std::span<const int> truth,
                              const std::vector<std::string>& class_labels);

struct UtilityEntry {
    std::string spec_name;
    ClassificationReport report;
};

struct UtilityRun {
    std::vector<UtilityEntry> entries;
    size_t best_index = 0; // highest accuracy, first on ties
};

UtilityRun trtr(const DataTable& real_train, const DataTable& real_test,
                std::span<const ClassifierSpec> specs, const std::string& target);
UtilityRun tstr(const DataTable& synth_train, const DataTable& real_test,
                std::span<const ClassifierSpec> specs, const std::string& target);

nlohmann::json classification_report_to_json(const ClassificationReport& report);
nlohmann::json utility_run_to_json(const UtilityRun& run);

} // namespace synthtab
