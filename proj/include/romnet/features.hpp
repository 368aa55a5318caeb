#pragma once

// Feature selection on nodal temperatures: k-nearest-neighbour mutual
// information estimators, a Gaussian-process redundancy surrogate of pairwise
// MI against inter-node distance, and the geostatistical mRMR greedy search.

#include "romnet/common.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace romnet {

/// MI (nats) between a continuous variable and discrete labels, kNN
/// estimator with k neighbours within each label; clipped at 0.
double mutual_information_cd(const Vec& x, const std::vector<int>& labels, int k = 3);

/// MI (nats) between two continuous variables (Kraskov estimator, max norm,
/// both variables scaled to unit variance); clipped at 0.
double mutual_information_cc(const Vec& x, const Vec& y, int k = 3);

/// Gaussian process on a scalar input: constant mean, Matern-5/2 plus white
/// kernel, hyperparameters by marginal-likelihood maximization.
class GaussianProcess1D {
 public:
  void fit(const Vec& x, const Vec& y);
  double predict(double x) const;
  Vec predict(const Vec& x) const;

  double signal_variance() const { return signal_var_; }
  double length_scale() const { return length_; }
  double noise_variance() const { return noise_var_; }
  double log_marginal_likelihood() const { return lml_; }

  /// Restores a fitted model from its hyperparameters and training data.
  void set_state(const Vec& x, const Vec& y, double signal_var, double length, double noise_var);

 private:
  void factor();
  Vec x_, y_;
  double mean_ = 0.0;
  double signal_var_ = 1.0, length_ = 1.0, noise_var_ = 1e-2;
  double lml_ = 0.0;
  double jitter_ = 0.0;
  Vec alpha_;
};

double matern52(double r, double signal_var, double length);

struct RedundancySurrogate {
  GaussianProcess1D gp;
  Vec pair_distances;
  Vec pair_mi;
  double operator()(double distance) const { return gp.predict(distance); }
};

/// Samples `n_pairs` distinct node pairs, estimates the MI between their
/// temperatures over the samples (rows of `temperatures` are samples) and
/// fits the GP against Euclidean distance.
RedundancySurrogate fit_redundancy_surrogate(const std::vector<Vec3>& node_coords,
                                             const Mat& temperatures, int n_pairs,
                                             std::uint64_t seed);

struct FeatureSelection {
  std::vector<int> preselected;   // node indices with relevance >= threshold
  std::vector<int> selected;      // greedy order
  Vec relevance;                  // per node
};

/// Relevance of every column of `temperatures` (samples x nodes) to labels.
Vec relevance_scores(const Mat& temperatures, const std::vector<int>& labels, int workers = 1);

/// First pick: argmax relevance; then argmax relevance(f) - mean_s surrogate(|x_f - x_s|).
FeatureSelection geostat_mrmr(const Vec& relevance,
                              const std::function<double(double)>& surrogate,
                              const std::vector<Vec3>& node_coords, double threshold, int k);

}  // namespace romnet
