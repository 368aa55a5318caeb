#pragma once

// Reconstruction of dual fields from their values on the reduced-integration
// domain: Gappy-POD least squares and a multi-task Lasso surrogate mapping
// RID values to POD coefficients.

#include "romnet/pod.hpp"

#include <cstdint>
#include <vector>

namespace romnet {

/// Least-squares POD coefficients from values at `rows` of the basis
/// (column-pivoted QR; minimum-norm solution when rank deficient, with
/// `rank_deficient` set).
Vec gappy_pod(const Vec& rid_values, const Mat& basis_rows, bool* rank_deficient = nullptr);

struct MultiTaskLassoFit {
  Mat weights;               // p x t, in the original (unstandardized) input units
  Vec intercept;             // t
  Mat standardized_weights;  // solver units, usable as a warm start
  int sweeps = 0;
  std::vector<double> objective_history;  // per sweep, standardized problem
};

/// Minimizes (1/2n) ||Y - X W - 1 b^T||_F^2 + lambda sum_j ||W_j||_2 by block
/// coordinate descent on standardized inputs. Constant input columns get a
/// zero row. `warm_start` is in standardized units.
MultiTaskLassoFit fit_multitask_lasso(const Mat& x, const Mat& y, double lambda,
                                      double tol = 1e-10, int max_sweeps = 100000,
                                      const Mat* warm_start = nullptr);

/// Smallest lambda for which every weight row is zero (standardized inputs).
double multitask_lasso_lambda_max(const Mat& x, const Mat& y);

/// Mean over tasks of the coefficient of determination (a constant task
/// scores 1 when predicted exactly and 0 otherwise).
double mean_r2(const Mat& truth, const Mat& prediction);
/// One minus the total residual over the total variance, summed over every
/// column.
double variance_weighted_r2(const Mat& truth, const Mat& prediction);

struct GappySurrogate {
  Mat weights;      // n_inputs x n_modes
  Vec intercept;    // n_modes
  double lambda = 0.0;
  double cv_r2 = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> cv_scores;
  int folds = 0;
  std::uint64_t seed = 0;

  Vec predict(const Vec& rid_values) const;
  /// Fraction of inputs with a nonzero weight row.
  double active_fraction() const;
};

/// lambda by k-fold cross-validation (variance-weighted R^2 of the pooled
/// out-of-fold predictions) on a 30-point log grid from
/// lambda_max to 1e-4 lambda_max, then refit on all data.
GappySurrogate train_gappy_surrogate(const Mat& x, const Mat& y, int folds, std::uint64_t seed,
                                     int grid_size = 30);

/// basis.modes * surrogate.predict(rid_values).
Vec reconstruct_dual(const Vec& rid_values, const GappySurrogate& surrogate, const ReducedBasis& basis);

/// Shuffled k-fold assignment: fold index per sample.
std::vector<int> kfold_assignment(int n, int folds, std::uint64_t seed);

}  // namespace romnet
