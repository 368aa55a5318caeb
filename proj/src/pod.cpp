#include "romnet/pod.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace romnet {

double weighted_dot(const Vec& a, const Vec& b, const Vec& weights) {
  return (a.array() * b.array() * weights.array()).sum();
}

double weighted_norm(const Vec& u, const Vec& weights) {
  return std::sqrt(std::max(weighted_dot(u, u, weights), 0.0));
}

Vec ReducedBasis::project(const Vec& u) const {
  return modes.transpose() * (weights.array() * u.array()).matrix();
}

double ReducedBasis::projection_error(const Vec& u) const {
  const double norm = weighted_norm(u, weights);
  if (norm == 0.0) return 0.0;
  const Vec r = u - modes * project(u);
  return weighted_norm(r, weights) / norm;
}

namespace {

int retained_count(const Vec& eigenvalues, double tol) {
  if (eigenvalues.size() == 0 || !(eigenvalues[0] > 0.0)) return 0;
  // Numerical-rank floor: directions below round-off of the largest one are
  // noise whatever the requested tolerance.
  const double floor_ratio = 1e-28;
  const double ratio = std::max(tol * tol, floor_ratio);
  int n = 0;
  while (n < eigenvalues.size() && eigenvalues[n] / eigenvalues[0] >= ratio) ++n;
  return n;
}

}  // namespace

ReducedBasis snapshot_pod(const Mat& snapshots, double tol, const Vec& weights) {
  if (snapshots.cols() < 1) throw Error("snapshot_pod needs at least one snapshot");
  if (weights.size() != snapshots.rows()) throw Error("POD weight vector size mismatch");
  if ((weights.array() <= 0.0).any()) throw Error("POD weights must be positive");
  ReducedBasis basis;
  basis.weights = weights;
  basis.tolerance = tol;
  const Vec sqrt_w = weights.cwiseSqrt();
  const Mat scaled = sqrt_w.asDiagonal() * snapshots;
  Eigen::BDCSVD<Mat> svd(scaled, Eigen::ComputeThinU);
  basis.all_eigenvalues = svd.singularValues().array().square();
  const int n = retained_count(basis.all_eigenvalues, tol);
  basis.eigenvalues = basis.all_eigenvalues.head(n);
  basis.modes = sqrt_w.cwiseInverse().asDiagonal() * svd.matrixU().leftCols(n);
  // Sign convention: largest-magnitude entry positive.
  for (int i = 0; i < n; ++i) {
    Eigen::Index imax;
    basis.modes.col(i).cwiseAbs().maxCoeff(&imax);
    if (basis.modes(imax, i) < 0.0) basis.modes.col(i) *= -1.0;
  }
  return basis;
}

ReducedBasis snapshot_pod_correlation(const Mat& snapshots, double tol, const Vec& weights) {
  if (snapshots.cols() < 1) throw Error("snapshot_pod needs at least one snapshot");
  ReducedBasis basis;
  basis.weights = weights;
  basis.tolerance = tol;
  const Mat corr = snapshots.transpose() * weights.asDiagonal() * snapshots;
  Eigen::SelfAdjointEigenSolver<Mat> eig(corr);
  if (eig.info() != Eigen::Success) throw Error("correlation eigen-solver did not converge");
  basis.all_eigenvalues = eig.eigenvalues().reverse().cwiseMax(0.0);
  const int n = retained_count(basis.all_eigenvalues, tol);
  basis.eigenvalues = basis.all_eigenvalues.head(n);
  basis.modes.resize(snapshots.rows(), n);
  const Eigen::Index ns = corr.rows();
  for (int i = 0; i < n; ++i) {
    basis.modes.col(i) =
        snapshots * eig.eigenvectors().col(ns - 1 - i) / std::sqrt(basis.eigenvalues[i]);
    Eigen::Index imax;
    basis.modes.col(i).cwiseAbs().maxCoeff(&imax);
    if (basis.modes(imax, i) < 0.0) basis.modes.col(i) *= -1.0;
  }
  return basis;
}

}  // namespace romnet
