#include "romnet/gappy.hpp"

#include <Eigen/QR>

#include <random>

namespace romnet {

Vec gappy_pod(const Vec& rid_values, const Mat& basis_rows, bool* rank_deficient) {
  if (rid_values.size() != basis_rows.rows()) throw Error("Gappy-POD size mismatch");
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(basis_rows);
  if (rank_deficient) *rank_deficient = cod.rank() < basis_rows.cols();
  return cod.solve(rid_values);
}

namespace {

struct Standardized {
  Mat x;
  Vec mean, scale;  // scale 0 marks a constant column
  Vec y_mean;
  Mat y;
};

Standardized standardize(const Mat& x, const Mat& y) {
  Standardized s;
  const double n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean();
  s.x = x.rowwise() - s.mean.transpose();
  s.scale = (s.x.colwise().squaredNorm() / n).cwiseSqrt();
  for (Eigen::Index j = 0; j < s.x.cols(); ++j) {
    if (s.scale[j] > 1e-12 * std::max(1.0, std::abs(s.mean[j]))) {
      s.x.col(j) /= s.scale[j];
    } else {
      s.scale[j] = 0.0;
      s.x.col(j).setZero();
    }
  }
  s.y_mean = y.colwise().mean();
  s.y = y.rowwise() - s.y_mean.transpose();
  return s;
}

}  // namespace

double multitask_lasso_lambda_max(const Mat& x, const Mat& y) {
  const Standardized s = standardize(x, y);
  const Mat g = s.x.transpose() * s.y;
  return g.rowwise().norm().maxCoeff() / static_cast<double>(x.rows());
}

MultiTaskLassoFit fit_multitask_lasso(const Mat& x, const Mat& y, double lambda, double tol,
                                      int max_sweeps, const Mat* warm_start) {
  if (x.rows() != y.rows()) throw Error("multi-task Lasso: X and Y row counts differ");
  if (x.rows() < 1) throw Error("multi-task Lasso needs at least one sample");
  const Standardized s = standardize(x, y);
  const Eigen::Index n = x.rows(), p = x.cols(), t = y.cols();
  const double dn = static_cast<double>(n);
  Mat w = Mat::Zero(p, t);
  if (warm_start && warm_start->rows() == p && warm_start->cols() == t) w = *warm_start;
  Mat r = s.y - s.x * w;
  const Vec col_sq = s.x.colwise().squaredNorm();
  auto objective = [&]() {
    return 0.5 / dn * r.squaredNorm() + lambda * w.rowwise().norm().sum();
  };
  MultiTaskLassoFit fit;
  const double y_scale = std::max(s.y.cwiseAbs().maxCoeff(), 1e-300);
  const double y_sq = s.y.squaredNorm();
  // One coordinate pass over `rows`; returns (max |change|, max |w|).
  auto pass = [&](const std::vector<Eigen::Index>& rows) {
    double max_change = 0.0, max_w = 0.0;
    for (Eigen::Index j : rows) {
      const Eigen::RowVectorXd old = w.row(j);
      const Eigen::RowVectorXd z = s.x.col(j).transpose() * r + col_sq[j] * old;
      const double zn = z.norm();
      Eigen::RowVectorXd updated = Eigen::RowVectorXd::Zero(t);
      if (zn > lambda * dn) updated = (1.0 - lambda * dn / zn) / col_sq[j] * z;
      const Eigen::RowVectorXd delta = updated - old;
      if (delta.squaredNorm() > 0.0) {
        r.noalias() -= s.x.col(j) * delta;
        w.row(j) = updated;
      }
      max_change = std::max(max_change, delta.cwiseAbs().maxCoeff());
      max_w = std::max(max_w, updated.cwiseAbs().maxCoeff());
    }
    return std::make_pair(max_change, max_w);
  };
  // Duality gap of the scaled problem, with the residual rescaled into the
  // dual feasible set. Only meaningful for lambda > 0.
  auto gap = [&]() {
    const double dual_norm = (s.x.transpose() * r).rowwise().norm().maxCoeff();
    const double c = dual_norm > lambda * dn ? lambda * dn / dual_norm : 1.0;
    const double primal = objective();
    const double dual = (c * (r.cwiseProduct(s.y)).sum() - 0.5 * c * c * r.squaredNorm()) / dn;
    return primal - dual;
  };
  std::vector<Eigen::Index> all_rows;
  for (Eigen::Index j = 0; j < p; ++j)
    if (col_sq[j] > 0.0) all_rows.push_back(j);
  auto converged = [&](double max_change, double max_w) {
    if (max_w == 0.0 || max_change <= tol * std::max(max_w, 1e-12 * y_scale)) return true;
    return lambda > 0.0 && gap() <= tol * y_sq / dn;
  };
  while (fit.sweeps < max_sweeps) {
    const auto [change, wmax] = pass(all_rows);
    ++fit.sweeps;
    fit.objective_history.push_back(objective());
    if (converged(change, wmax)) break;
    // Sweeps restricted to the active rows until they settle.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j : all_rows)
      if (w.row(j).squaredNorm() > 0.0) active.push_back(j);
    if (active.size() == all_rows.size()) continue;
    while (fit.sweeps < max_sweeps) {
      const auto [c2, w2] = pass(active);
      ++fit.sweeps;
      fit.objective_history.push_back(objective());
      if (w2 == 0.0 || c2 <= tol * std::max(w2, 1e-12 * y_scale)) break;
    }
  }
  // Back to original units.
  fit.weights = Mat::Zero(p, t);
  for (Eigen::Index j = 0; j < p; ++j)
    if (s.scale[j] > 0.0) fit.weights.row(j) = w.row(j) / s.scale[j];
  fit.intercept = s.y_mean - fit.weights.transpose() * s.mean;
  fit.standardized_weights = std::move(w);
  return fit;
}

double mean_r2(const Mat& truth, const Mat& prediction) {
  double total = 0.0;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    const double mean = truth.col(c).mean();
    const double ss_tot = (truth.col(c).array() - mean).square().sum();
    const double ss_res = (truth.col(c) - prediction.col(c)).squaredNorm();
    if (ss_tot > 0.0)
      total += 1.0 - ss_res / ss_tot;
    else
      total += ss_res == 0.0 ? 1.0 : 0.0;
  }
  return truth.cols() > 0 ? total / static_cast<double>(truth.cols()) : 1.0;
}

double variance_weighted_r2(const Mat& truth, const Mat& prediction) {
  const double ss_tot = (truth.rowwise() - truth.colwise().mean()).squaredNorm();
  const double ss_res = (truth - prediction).squaredNorm();
  if (ss_tot > 0.0) return 1.0 - ss_res / ss_tot;
  return ss_res == 0.0 ? 1.0 : 0.0;
}

std::vector<int> kfold_assignment(int n, int folds, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % folds;
  return fold;
}

Vec GappySurrogate::predict(const Vec& rid_values) const {
  return weights.transpose() * rid_values + intercept;
}

double GappySurrogate::active_fraction() const {
  if (weights.rows() == 0) return 0.0;
  int active = 0;
  for (Eigen::Index j = 0; j < weights.rows(); ++j) active += weights.row(j).cwiseAbs().maxCoeff() > 0.0;
  return static_cast<double>(active) / static_cast<double>(weights.rows());
}

GappySurrogate train_gappy_surrogate(const Mat& x, const Mat& y, int folds, std::uint64_t seed,
                                     int grid_size) {
  const int n = static_cast<int>(x.rows());
  if (n < folds || folds < 2) throw Error("Gappy surrogate training needs at least `folds` >= 2 samples");
  GappySurrogate out;
  out.folds = folds;
  out.seed = seed;
  const double lmax = multitask_lasso_lambda_max(x, y);
  if (!(lmax > 0.0)) {
    // Degenerate targets: intercept only.
    const MultiTaskLassoFit fit = fit_multitask_lasso(x, y, 1.0);
    out.weights = fit.weights;
    out.intercept = fit.intercept;
    out.cv_r2 = 1.0;
    return out;
  }
  for (int i = 0; i < grid_size; ++i)
    out.lambda_grid.push_back(lmax * std::pow(1e-4, grid_size > 1 ? static_cast<double>(i) / (grid_size - 1) : 0.0));
  const std::vector<int> fold = kfold_assignment(n, folds, seed);
  // Out-of-fold predictions pooled over the folds, one matrix per lambda.
  std::vector<Mat> oof(out.lambda_grid.size(), Mat::Zero(y.rows(), y.cols()));
  for (int f = 0; f < folds; ++f) {
    std::vector<int> tr, te;
    for (int i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    const Mat xtr = x(tr, Eigen::all), ytr = y(tr, Eigen::all);
    const Mat xte = x(te, Eigen::all);
    Mat warm;
    for (std::size_t l = 0; l < out.lambda_grid.size(); ++l) {
      const MultiTaskLassoFit fit = fit_multitask_lasso(xtr, ytr, out.lambda_grid[l], 1e-5, 5000,
                                                        l > 0 ? &warm : nullptr);
      warm = fit.standardized_weights;
      oof[l](te, Eigen::all) = (xte * fit.weights).rowwise() + fit.intercept.transpose();
    }
  }
  std::vector<double> scores(out.lambda_grid.size());
  for (std::size_t l = 0; l < scores.size(); ++l) scores[l] = variance_weighted_r2(y, oof[l]);
  std::size_t best = 0;
  for (std::size_t l = 1; l < scores.size(); ++l)
    if (scores[l] > scores[best]) best = l;  // ties keep the larger lambda
  out.cv_scores = scores;
  out.lambda = out.lambda_grid[best];
  out.cv_r2 = scores[best];
  const MultiTaskLassoFit fit = fit_multitask_lasso(x, y, out.lambda, 1e-7, 20000);
  out.weights = fit.weights;
  out.intercept = fit.intercept;
  return out;
}

Vec reconstruct_dual(const Vec& rid_values, const GappySurrogate& surrogate,
                     const ReducedBasis& basis) {
  return basis.modes * surrogate.predict(rid_values);
}

}  // namespace romnet
