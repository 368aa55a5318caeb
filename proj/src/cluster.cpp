#include "romnet/cluster.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <limits>
#include <numeric>
#include <random>

namespace romnet {

double rom_dissimilarity(const Vec& a, const Vec& b, const Vec& weights) {
  const double aa = (a.array().square() * weights.array()).sum();
  const double bb = (b.array().square() * weights.array()).sum();
  if (!(aa > 0.0) || !(bb > 0.0)) throw Error("dissimilarity of a zero field is undefined");
  const double ab = (a.array() * b.array() * weights.array()).sum();
  const double c = ab / std::sqrt(aa * bb);
  return std::sqrt(std::max(0.0, 1.0 - c * c));
}

double subspace_dissimilarity(const Mat& a, const Mat& b, const Vec& weights) {
  if (a.cols() == 1 && b.cols() == 1) return rom_dissimilarity(a.col(0), b.col(0), weights);
  const Vec sw = weights.cwiseSqrt();
  auto orthonormal = [&](const Mat& m) {
    const Mat scaled = sw.asDiagonal() * m;
    Eigen::ColPivHouseholderQR<Mat> qr(scaled);
    const Eigen::Index r = qr.rank();
    if (r == 0) throw Error("dissimilarity of a zero subspace is undefined");
    return Mat(Mat(qr.householderQ()).leftCols(r));
  };
  const Mat qa = orthonormal(a), qb = orthonormal(b);
  const Vec cosines = Eigen::JacobiSVD<Mat>(qa.transpose() * qb).singularValues();
  const Eigen::Index k = std::min(qa.cols(), qb.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::min(1.0, cosines[i]);
    sum += 1.0 - c * c;
  }
  return std::sqrt(std::max(0.0, sum / static_cast<double>(k)));
}

Mat dissimilarity_matrix(const Mat& fields, const Vec& weights, int workers) {
  const Eigen::Index n = fields.cols();
  Mat d = Mat::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
    for (Eigen::Index j = static_cast<Eigen::Index>(i) + 1; j < n; ++j)
      d(static_cast<Eigen::Index>(i), j) = rom_dissimilarity(fields.col(static_cast<Eigen::Index>(i)), fields.col(j), weights);
  });
  d.triangularView<Eigen::StrictlyLower>() = d.transpose();
  return d;
}

double medoid_cost(const Mat& d, const std::vector<int>& medoids) {
  double cost = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int m : medoids) best = std::min(best, d(i, m));
    cost += best;
  }
  return cost;
}

namespace {

std::vector<int> pam_build(const Mat& d, int k) {
  const Eigen::Index n = d.rows();
  std::vector<int> medoids;
  Vec nearest = Vec::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 0; c < k; ++c) {
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (Eigen::Index cand = 0; cand < n; ++cand) {
      if (std::find(medoids.begin(), medoids.end(), cand) != medoids.end()) continue;
      double cost = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) cost += std::min(nearest[i], d(i, cand));
      if (cost < best_cost) {
        best_cost = cost;
        best = static_cast<int>(cand);
      }
    }
    medoids.push_back(best);
    for (Eigen::Index i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d(i, best));
  }
  return medoids;
}

// Best-improvement swaps until no swap lowers the cost.
double pam_swap(const Mat& d, std::vector<int>& medoids) {
  const Eigen::Index n = d.rows();
  double cost = medoid_cost(d, medoids);
  for (int guard = 0; guard < 1000; ++guard) {
    double best_cost = cost;
    int best_slot = -1, best_cand = -1;
    for (std::size_t slot = 0; slot < medoids.size(); ++slot) {
      for (Eigen::Index cand = 0; cand < n; ++cand) {
        if (std::find(medoids.begin(), medoids.end(), cand) != medoids.end()) continue;
        std::vector<int> trial = medoids;
        trial[slot] = static_cast<int>(cand);
        const double c = medoid_cost(d, trial);
        if (c < best_cost - 1e-14 * std::max(1.0, cost)) {
          best_cost = c;
          best_slot = static_cast<int>(slot);
          best_cand = static_cast<int>(cand);
        }
      }
    }
    if (best_slot < 0) break;
    if (best_cost > cost) throw Error("PAM swap increased the cost");
    medoids[static_cast<std::size_t>(best_slot)] = best_cand;
    cost = best_cost;
  }
  return cost;
}

}  // namespace

Dictionary k_medoids(const Mat& d, int k, int n_init, std::uint64_t seed) {
  const auto n = static_cast<int>(d.rows());
  if (k < 1 || k > n) throw Error("k_medoids needs 1 <= K <= n");
  std::mt19937_64 rng(seed);
  std::vector<int> best;
  double best_cost = std::numeric_limits<double>::infinity();
  for (int init = 0; init < std::max(1, n_init); ++init) {
    std::vector<int> medoids;
    if (init == 0) {
      medoids = pam_build(d, k);
    } else {
      std::vector<int> all(static_cast<std::size_t>(n));
      std::iota(all.begin(), all.end(), 0);
      std::shuffle(all.begin(), all.end(), rng);
      medoids.assign(all.begin(), all.begin() + k);
    }
    const double cost = pam_swap(d, medoids);
    if (best.empty() || cost < best_cost - 1e-14 * std::max(1.0, best_cost)) {
      best_cost = cost;
      best = medoids;
    }
  }
  std::sort(best.begin(), best.end());
  Dictionary out;
  out.medoids = best;
  out.cost = best_cost;
  out.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int lab = 0;
    for (int c = 1; c < k; ++c)
      if (d(i, best[static_cast<std::size_t>(c)]) < d(i, best[static_cast<std::size_t>(lab)])) lab = c;
    out.labels[static_cast<std::size_t>(i)] = lab;
  }
  for (int c = 0; c < k; ++c) out.labels[static_cast<std::size_t>(best[static_cast<std::size_t>(c)])] = c;
  return out;
}

namespace {

double stress_of(const Mat& d, const Mat& z) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = i + 1; j < d.rows(); ++j) {
      const double r = d(i, j) - (z.row(i) - z.row(j)).norm();
      s += r * r;
    }
  return s;
}

}  // namespace

MdsResult mds_smacof(const Mat& d, int dim, int max_iterations, double tol) {
  const Eigen::Index n = d.rows();
  MdsResult out;
  out.coords = Mat::Zero(n, dim);
  if (n == 0) return out;
  // Classical scaling start.
  const Mat d2 = d.array().square();
  const Mat j = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
  const Mat b = -0.5 * j * d2 * j;
  Eigen::SelfAdjointEigenSolver<Mat> eig(b);
  for (int c = 0; c < dim && c < n; ++c) {
    const double lambda = eig.eigenvalues()[n - 1 - c];
    if (lambda > 0.0) out.coords.col(c) = eig.eigenvectors().col(n - 1 - c) * std::sqrt(lambda);
  }
  double stress0 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = i + 1; k < n; ++k) stress0 += d(i, k) * d(i, k);
  double stress = stress_of(d, out.coords);
  out.stress_history.push_back(stress);
  // Guttman transform iterations (unit weights).
  for (int it = 0; it < max_iterations; ++it) {
    Mat bz = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k) {
        if (i == k) continue;
        const double dist = (out.coords.row(i) - out.coords.row(k)).norm();
        if (dist > 1e-300) bz(i, k) = -d(i, k) / dist;
      }
    for (Eigen::Index i = 0; i < n; ++i) bz(i, i) = -bz.row(i).sum();
    const Mat next = bz * out.coords / static_cast<double>(n);
    const double next_stress = stress_of(d, next);
    out.iterations = it + 1;
    if (next_stress > stress) break;  // round-off level; keep the better iterate
    out.coords = next;
    const double decrease = stress - next_stress;
    stress = next_stress;
    out.stress_history.push_back(stress);
    if (decrease < tol * std::max(stress0, 1e-300)) break;
  }
  out.relative_stress = stress0 > 0.0 ? stress / stress0 : 0.0;
  return out;
}

std::vector<int> maximin_select(const Mat& d, const std::vector<int>& members, int m, int medoid) {
  if (m > static_cast<int>(members.size())) throw Error("maximin_select: m exceeds cluster size");
  if (std::find(members.begin(), members.end(), medoid) == members.end())
    throw Error("maximin_select: medoid is not a cluster member");
  std::vector<int> selected{medoid};
  std::vector<double> mind;
  for (int i : members) mind.push_back(d(i, medoid));
  while (static_cast<int>(selected.size()) < m) {
    std::size_t best = 0;
    double best_d = -1.0;
    for (std::size_t a = 0; a < members.size(); ++a) {
      if (std::find(selected.begin(), selected.end(), members[a]) != selected.end()) continue;
      if (mind[a] > best_d) {
        best_d = mind[a];
        best = a;
      }
    }
    selected.push_back(members[best]);
    for (std::size_t a = 0; a < members.size(); ++a) mind[a] = std::min(mind[a], d(members[a], members[best]));
  }
  return selected;
}

int label_by_medoid(const Vec& field, const std::vector<Vec>& medoid_fields, const Vec& weights,
                    bool* tie) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  bool tied = false;
  for (std::size_t m = 0; m < medoid_fields.size(); ++m) {
    const double dd = rom_dissimilarity(field, medoid_fields[m], weights);
    if (dd < best_d) {
      best_d = dd;
      best = static_cast<int>(m);
      tied = false;
    } else if (dd == best_d) {
      tied = true;
    }
  }
  if (tie) *tie = tied;
  return best;
}

}  // namespace romnet
