#pragma once

// Elastic-net logistic regression (one-vs-rest beyond two classes) with
// cross-validated regularization, and a classification report.

#include "romnet/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace romnet {

struct LogisticOptions {
  double c = 1.0;         // inverse regularization strength
  double l1_ratio = 0.5;  // weight of the L1 term
  int max_iterations = 10000;
  double tol = 1e-8;      // on relative objective decrease
};

/// Binary elastic-net logistic regression on already standardized inputs:
/// min C sum_i logloss_i + l1 ||w||_1 + (1 - l1)/2 ||w||^2 (intercept free),
/// by proximal gradient with backtracking. Returns (w, b) packed as w then b.
Vec fit_binary_logistic(const Mat& x, const std::vector<int>& y01, const LogisticOptions& opt,
                        double* objective = nullptr);

struct Classifier {
  std::vector<int> classes;  // sorted class labels
  Mat weights;               // n_features x n_models (1 for binary, K for OvR), raw feature units
  Vec intercept;             // n_models
  double c = 1.0;
  double l1_ratio = 0.5;
  int folds = 5;
  std::uint64_t seed = 0;
  double cv_accuracy = 0.0;
  std::vector<double> c_grid, l1_grid;
  Mat cv_scores;             // |c_grid| x |l1_grid|

  Vec predict_proba(const Vec& features) const;
  int predict(const Vec& features) const;
  /// Fraction of zero weights.
  double sparsity() const;
};

/// Fits one model with fixed (C, l1_ratio); inputs are standardized
/// internally and the weights mapped back to raw units.
Classifier fit_classifier(const Mat& x, const std::vector<int>& y, const LogisticOptions& opt);

/// Grid search over C x l1_ratio by k-fold CV on mean accuracy. Ties prefer
/// the smaller C, then the larger l1_ratio.
Classifier train_classifier(const Mat& x, const std::vector<int>& y,
                            const std::vector<double>& c_grid, const std::vector<double>& l1_grid,
                            int folds, std::uint64_t seed);

struct ClassMetrics {
  int label = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  int support = 0;
};

struct ClassificationReport {
  std::vector<ClassMetrics> per_class;
  double accuracy = 0.0;
  ClassMetrics macro, weighted;
  Eigen::MatrixXi confusion;  // rows truth, cols prediction
  std::string to_string() const;
};

ClassificationReport classification_report(const std::vector<int>& truth,
                                           const std::vector<int>& predicted);

/// Nodal temperatures at the selected nodes.
Vec extract_features(const Vec& nodal_temperature, const std::vector<int>& selected_nodes);

}  // namespace romnet
