#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lifestyles/error.hpp"

namespace lifestyles {

struct DecisionTree {
    // feature >= 0: internal node (x[feature] <= threshold -> left else right);
    // feature == -1: leaf predicting leaf_class (dense id)
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int leaf_class = 0;
    };
    std::vector<Node> nodes;

    int predict(const std::vector<double>& x) const;
};

// Bagged Gini trees: bootstrap per tree, sqrt(p) feature candidates per
// split, unlimited depth, min split size 2.
struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<int> classes;  // sorted original labels
    std::vector<std::string> feature_names;
};

struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
    std::vector<std::string> warnings;
};

// Stratified split (per-class largest-remainder allocation); classes with
// fewer than 3 samples fall back to a pooled unstratified allocation.
DataSplit split_data(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                     std::array<double, 3> fractions, std::uint64_t seed);

ForestModel rf_fit(const std::vector<std::vector<double>>& X, const std::vector<int>& y,
                   std::size_t n_estimators, std::uint64_t seed,
                   std::vector<std::string> feature_names = {});

struct Prediction {
    std::vector<int> labels;
    std::vector<std::vector<double>> votes;  // per sample, per class; rows sum to 1
};

Prediction rf_predict(const ForestModel& model, const std::vector<std::vector<double>>& X);

struct PerClassMetrics {
    int label = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

struct EvalMetrics {
    std::vector<int> classes;
    std::vector<std::vector<std::size_t>> confusion;  // true x predicted
    std::vector<PerClassMetrics> per_class;
    double accuracy = 0.0;
    std::vector<std::pair<double, double>> roc;  // (FPR, TPR), binary only
    double auc = -1.0;                           // -1 when not applicable
    std::vector<std::string> notes;
};

EvalMetrics evaluate(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                     const std::vector<double>* scores = nullptr);

// AUC as the probability that a positive outscores a negative (ties count
// half); identical to the trapezoidal area under the returned curve.
std::pair<std::vector<std::pair<double, double>>, double> roc_auc(
    const std::vector<double>& scores, const std::vector<int>& y);

// Chi-squared statistic of class-conditional feature mass; expects
// non-negative (min-max scaled) inputs. Returns top_k feature indices in
// descending statistic order.
std::vector<std::size_t> chi2_select(const std::vector<std::vector<double>>& X_scaled,
                                     const std::vector<int>& y, std::size_t top_k = 15);

// Mean accuracy drop over n_repeats independent shuffles of each column.
std::vector<double> permutation_importance(const ForestModel& model,
                                           const std::vector<std::vector<double>>& X,
                                           const std::vector<int>& y, std::size_t n_repeats,
                                           std::uint64_t seed);

void save_metrics_report(const EvalMetrics& m, const std::string& txt_path,
                         const std::string& csv_path);
void save_roc(const std::vector<std::pair<double, double>>& roc, const std::string& path);

}  // namespace lifestyles
