#include "romnet/ecm.hpp"

#include <Eigen/Cholesky>

#include <limits>

namespace romnet {

namespace {

// Lawson-Hanson on the normal equations: min 1/2 x^T H x - c^T x, x >= 0.
// `x` holds a feasible warm start on entry.
void nnls_gram(const Mat& h, const Vec& c, Vec& x, int max_iterations) {
  const Eigen::Index n = h.rows();
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) passive[static_cast<std::size_t>(i)] = x[i] > 0.0;
  const double tol = 1e-12 * std::max(c.cwiseAbs().maxCoeff(), 1e-300);

  auto solve_passive = [&](Vec& s) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < n; ++i)
      if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
    s = Vec::Zero(n);
    if (idx.empty()) return;
    const auto k = static_cast<Eigen::Index>(idx.size());
    Mat hp(k, k);
    Vec cp(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      cp[a] = c[idx[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < k; ++b)
        hp(a, b) = h(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    const Vec sp = hp.ldlt().solve(cp);
    for (Eigen::Index a = 0; a < k; ++a) s[idx[static_cast<std::size_t>(a)]] = sp[a];
  };

  auto inner = [&]() {
    for (int guard = 0; guard <= n; ++guard) {
      Vec s;
      solve_passive(s);
      double alpha = 1.0;
      bool feasible = true;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!passive[static_cast<std::size_t>(i)] || s[i] > 0.0) continue;
        feasible = false;
        const double denom = x[i] - s[i];
        alpha = std::min(alpha, denom > 0.0 ? x[i] / denom : 0.0);
      }
      if (feasible) {
        x = s;
        return;
      }
      x += alpha * (s - x);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (passive[static_cast<std::size_t>(i)] && x[i] <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          passive[static_cast<std::size_t>(i)] = 0;
          x[i] = 0.0;
        }
      }
    }
  };

  bool any_passive = std::any_of(passive.begin(), passive.end(), [](char p) { return p; });
  if (any_passive) inner();
  const int limit = max_iterations > 0 ? max_iterations : static_cast<int>(3 * n + 10);
  for (int it = 0; it < limit; ++it) {
    const Vec g = c - h * x;
    Eigen::Index best = -1;
    double gmax = tol;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!passive[static_cast<std::size_t>(i)] && g[i] > gmax) {
        gmax = g[i];
        best = i;
      }
    if (best < 0) return;
    passive[static_cast<std::size_t>(best)] = 1;
    inner();
  }
}

}  // namespace

Vec nnls(const Mat& a, const Vec& b, int max_iterations) {
  const Mat h = a.transpose() * a;
  const Vec c = a.transpose() * b;
  Vec x = Vec::Zero(a.cols());
  nnls_gram(h, c, x, max_iterations);
  return x;
}

ReducedQuadrature ecm_quadrature(const Mat& integrands, const Vec& ip_weights, double tol) {
  const Eigen::Index n = integrands.cols();
  if (ip_weights.size() != n) throw Error("ECM weight vector size mismatch");
  // Everything below works on the Gram matrix H = G^T G, since
  // ||G (x - w)||^2 = (x - w)^T H (x - w).
  Mat h = Mat::Zero(n, n);
  h.selfadjointView<Eigen::Lower>().rankUpdate(integrands.transpose());
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  const Vec hw = h * ip_weights;
  const double target_sq = ip_weights.dot(hw);
  ReducedQuadrature out;
  if (!(target_sq > 0.0)) {
    out.residual = 0.0;
    return out;
  }
  const double target = std::sqrt(target_sq);

  std::vector<int> selected;
  Vec x;  // weights on `selected`
  auto residual_norm = [&]() {
    if (selected.empty()) return target;
    double q = target_sq;
    for (std::size_t a = 0; a < selected.size(); ++a) {
      q -= 2.0 * x[static_cast<Eigen::Index>(a)] * hw[selected[a]];
      for (std::size_t b = 0; b < selected.size(); ++b)
        q += x[static_cast<Eigen::Index>(a)] * x[static_cast<Eigen::Index>(b)] * h(selected[a], selected[b]);
    }
    return std::sqrt(std::max(q, 0.0));
  };

  double res = target;
  int flat = 0;
  std::vector<char> in_set(static_cast<std::size_t>(n), 0);
  for (Eigen::Index iter = 0; iter < 2 * n + 10; ++iter) {
    if (res <= tol * target) break;
    // Correlation of each column with the residual G (w - x).
    Vec r = hw;
    for (std::size_t a = 0; a < selected.size(); ++a)
      r -= x[static_cast<Eigen::Index>(a)] * h.col(selected[a]);
    Eigen::Index best = -1;
    double best_corr = 0.0;
    for (Eigen::Index p = 0; p < n; ++p) {
      if (in_set[static_cast<std::size_t>(p)] || !(h(p, p) > 0.0)) continue;
      const double corr = r[p] / std::sqrt(h(p, p));
      if (corr > best_corr) {
        best_corr = corr;
        best = p;
      }
    }
    if (best < 0) {
      out.stagnated = true;
      break;
    }
    selected.push_back(static_cast<int>(best));
    in_set[static_cast<std::size_t>(best)] = 1;
    const auto k = static_cast<Eigen::Index>(selected.size());
    Mat hz(k, k);
    Vec cz(k);
    for (Eigen::Index a = 0; a < k; ++a) {
      cz[a] = hw[selected[static_cast<std::size_t>(a)]];
      for (Eigen::Index b = 0; b < k; ++b)
        hz(a, b) = h(selected[static_cast<std::size_t>(a)], selected[static_cast<std::size_t>(b)]);
    }
    Vec xz = Vec::Zero(k);
    xz.head(k - 1) = x;
    nnls_gram(hz, cz, xz, -1);
    // Drop points whose weight vanished.
    std::vector<int> kept;
    std::vector<double> kept_w;
    for (Eigen::Index a = 0; a < k; ++a) {
      if (xz[a] > 0.0) {
        kept.push_back(selected[static_cast<std::size_t>(a)]);
        kept_w.push_back(xz[a]);
      } else {
        in_set[static_cast<std::size_t>(selected[static_cast<std::size_t>(a)])] = 0;
      }
    }
    selected = kept;
    x = Eigen::Map<Vec>(kept_w.data(), static_cast<Eigen::Index>(kept_w.size()));
    const double new_res = residual_norm();
    if (res - new_res < 1e-12 * target) {
      if (++flat >= 3) {
        res = new_res;
        out.stagnated = true;
        break;
      }
    } else {
      flat = 0;
    }
    res = new_res;
  }
  out.residual = res / target;
  if (out.residual > tol) out.stagnated = true;

  std::vector<std::size_t> order(selected.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return selected[a] < selected[b]; });
  out.weights.resize(static_cast<Eigen::Index>(selected.size()));
  for (std::size_t i = 0; i < order.size(); ++i) {
    out.points.push_back(selected[order[i]]);
    out.weights[static_cast<Eigen::Index>(i)] = x[static_cast<Eigen::Index>(order[i])];
  }
  return out;
}

}  // namespace romnet
