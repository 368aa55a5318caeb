#include "romnet/features.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/digamma.hpp>

#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace romnet {

namespace {

double digamma(double x) { return boost::math::digamma(x); }

// Distance from x[i] to its k-th nearest neighbour among `idx` (excluding i).
double kth_distance_1d(const Vec& x, const std::vector<int>& idx, int i, int k) {
  std::vector<double> d;
  d.reserve(idx.size());
  for (int j : idx)
    if (j != i) d.push_back(std::abs(x[j] - x[i]));
  std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
  return d[static_cast<std::size_t>(k - 1)];
}

}  // namespace

double mutual_information_cd(const Vec& x, const std::vector<int>& labels, int k) {
  const auto n = static_cast<int>(x.size());
  if (static_cast<int>(labels.size()) != n) throw Error("MI: feature and label sizes differ");
  if (n < 2) return 0.0;
  if (x.maxCoeff() == x.minCoeff()) return 0.0;
  std::vector<double> radius(static_cast<std::size_t>(n), 0.0);
  std::vector<int> k_used(static_cast<std::size_t>(n), 0), count(static_cast<std::size_t>(n), 0);
  std::set<int> classes(labels.begin(), labels.end());
  for (int c : classes) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (labels[static_cast<std::size_t>(i)] == c) idx.push_back(i);
    const auto nc = static_cast<int>(idx.size());
    for (int i : idx) count[static_cast<std::size_t>(i)] = nc;
    if (nc < 2) continue;
    const int kc = std::min(k, nc - 1);
    for (int i : idx) {
      radius[static_cast<std::size_t>(i)] = std::nextafter(kth_distance_1d(x, idx, i, kc), 0.0);
      k_used[static_cast<std::size_t>(i)] = kc;
    }
  }
  std::vector<int> keep;
  for (int i = 0; i < n; ++i)
    if (count[static_cast<std::size_t>(i)] > 1) keep.push_back(i);
  if (keep.empty()) return 0.0;
  const auto m = static_cast<double>(keep.size());
  double mean_k = 0.0, mean_count = 0.0, mean_m = 0.0;
  for (int i : keep) {
    int within = 0;  // includes the point itself
    for (int j : keep)
      if (std::abs(x[j] - x[i]) <= radius[static_cast<std::size_t>(i)]) ++within;
    mean_k += digamma(k_used[static_cast<std::size_t>(i)]) / m;
    mean_count += digamma(count[static_cast<std::size_t>(i)]) / m;
    mean_m += digamma(within) / m;
  }
  return std::max(0.0, digamma(m) + mean_k - mean_count - mean_m);
}

double mutual_information_cc(const Vec& x_raw, const Vec& y_raw, int k) {
  const Eigen::Index n = x_raw.size();
  if (y_raw.size() != n) throw Error("MI: variable sizes differ");
  if (n <= k) return 0.0;
  if (x_raw.maxCoeff() == x_raw.minCoeff() || y_raw.maxCoeff() == y_raw.minCoeff()) return 0.0;
  // The max-norm neighbourhoods mix both variables, so put them on one scale.
  auto unit_variance = [](const Vec& v) {
    const double sd = std::sqrt((v.array() - v.mean()).square().mean());
    return Vec(v / sd);
  };
  const Vec x = unit_variance(x_raw), y = unit_variance(y_raw);
  double mean_nx = 0.0, mean_ny = 0.0;
  std::vector<double> d(static_cast<std::size_t>(n - 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) d[c++] = std::max(std::abs(x[j] - x[i]), std::abs(y[j] - y[i]));
    std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
    const double r = std::nextafter(d[static_cast<std::size_t>(k - 1)], 0.0);
    int nx = 0, ny = 0;  // include the point itself
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(x[j] - x[i]) <= r) ++nx;
      if (std::abs(y[j] - y[i]) <= r) ++ny;
    }
    mean_nx += digamma(nx) / static_cast<double>(n);
    mean_ny += digamma(ny) / static_cast<double>(n);
  }
  return std::max(0.0, digamma(static_cast<double>(n)) + digamma(k) - mean_nx - mean_ny);
}

double matern52(double r, double signal_var, double length) {
  const double s = std::sqrt(5.0) * std::abs(r) / length;
  return signal_var * (1.0 + s + s * s / 3.0) * std::exp(-s);
}

namespace {

struct GpEval {
  double lml = -std::numeric_limits<double>::infinity();
  double jitter = 0.0;
  Vec alpha;
  Eigen::LLT<Mat> llt;
};

GpEval evaluate_gp(const Vec& x, const Vec& yc, double sv, double len, double nv) {
  const Eigen::Index n = x.size();
  Mat k(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) k(i, j) = matern52(x[i] - x[j], sv, len);
  k.diagonal().array() += nv;
  GpEval out;
  double jitter = 0.0;
  const double base = std::max(1e-300, k.diagonal().mean());
  for (int attempt = 0; attempt < 12; ++attempt) {
    Mat kj = k;
    kj.diagonal().array() += jitter;
    out.llt.compute(kj);
    if (out.llt.info() == Eigen::Success) break;
    jitter = jitter == 0.0 ? 1e-12 * base : jitter * 10.0;
  }
  if (out.llt.info() != Eigen::Success) return out;
  out.jitter = jitter;
  out.alpha = out.llt.solve(yc);
  const Mat& l = out.llt.matrixLLT();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += 2.0 * std::log(l(i, i));
  out.lml = -0.5 * yc.dot(out.alpha) - 0.5 * logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
  return out;
}

// Nelder-Mead minimization in a few dimensions.
Vec nelder_mead(const std::function<double(const Vec&)>& f, Vec x0, double step, int max_evals) {
  const Eigen::Index d = x0.size();
  std::vector<Vec> simplex{x0};
  for (Eigen::Index i = 0; i < d; ++i) {
    Vec v = x0;
    v[i] += step;
    simplex.push_back(v);
  }
  std::vector<double> fv;
  for (const auto& v : simplex) fv.push_back(f(v));
  int evals = static_cast<int>(simplex.size());
  while (evals < max_evals) {
    std::vector<std::size_t> order(simplex.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<Vec> s2;
    std::vector<double> f2;
    for (auto o : order) {
      s2.push_back(simplex[o]);
      f2.push_back(fv[o]);
    }
    simplex = s2;
    fv = f2;
    if (std::abs(fv.back() - fv.front()) < 1e-10 * (1.0 + std::abs(fv.front()))) break;
    Vec centroid = Vec::Zero(d);
    for (Eigen::Index i = 0; i < d; ++i) centroid += simplex[static_cast<std::size_t>(i)] / static_cast<double>(d);
    const Vec& worst = simplex.back();
    const Vec xr = centroid + (centroid - worst);
    const double fr = f(xr);
    ++evals;
    if (fr < fv.front()) {
      const Vec xe = centroid + 2.0 * (centroid - worst);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        simplex.back() = xe;
        fv.back() = fe;
      } else {
        simplex.back() = xr;
        fv.back() = fr;
      }
    } else if (fr < fv[fv.size() - 2]) {
      simplex.back() = xr;
      fv.back() = fr;
    } else {
      const Vec xc = centroid + 0.5 * (worst - centroid);
      const double fc = f(xc);
      ++evals;
      if (fc < fv.back()) {
        simplex.back() = xc;
        fv.back() = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          fv[i] = f(simplex[i]);
          ++evals;
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < fv.size(); ++i)
    if (fv[i] < fv[best]) best = i;
  return simplex[best];
}

}  // namespace

void GaussianProcess1D::fit(const Vec& x, const Vec& y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("GP fit needs at least two (x, y) pairs");
  x_ = x;
  y_ = y;
  mean_ = y.mean();
  const Vec yc = y.array() - mean_;
  const double var = std::max(yc.squaredNorm() / static_cast<double>(y.size()), 1e-300);
  const double span = std::max(x.maxCoeff() - x.minCoeff(), 1e-12);
  // Bounds in log space, as box constraints through clamping.
  const double lo_noise = std::log(1e-10 * var), hi_noise = std::log(10.0 * var);
  const double lo_len = std::log(1e-3 * span), hi_len = std::log(1e3 * span);
  const double lo_sv = std::log(1e-6 * var), hi_sv = std::log(1e3 * var);
  auto clamp_theta = [&](const Vec& t) {
    Vec c(3);
    c[0] = std::clamp(t[0], lo_sv, hi_sv);
    c[1] = std::clamp(t[1], lo_len, hi_len);
    c[2] = std::clamp(t[2], lo_noise, hi_noise);
    return c;
  };
  auto objective = [&](const Vec& t) {
    const Vec c = clamp_theta(t);
    const GpEval e = evaluate_gp(x_, yc, std::exp(c[0]), std::exp(c[1]), std::exp(c[2]));
    return std::isfinite(e.lml) ? -e.lml : 1e300;
  };
  // A few starts; keep the best.
  Vec best_theta;
  double best_val = std::numeric_limits<double>::infinity();
  for (double len_frac : {0.1, 0.5}) {
    for (double noise_frac : {1e-6, 1e-1}) {
      Vec t0(3);
      t0 << std::log(var), std::log(len_frac * span), std::log(noise_frac * var);
      const Vec t = clamp_theta(nelder_mead(objective, t0, 1.0, 150));
      const double v = objective(t);
      if (v < best_val) {
        best_val = v;
        best_theta = t;
      }
    }
  }
  signal_var_ = std::exp(best_theta[0]);
  length_ = std::exp(best_theta[1]);
  noise_var_ = std::exp(best_theta[2]);
  factor();
}

void GaussianProcess1D::set_state(const Vec& x, const Vec& y, double signal_var, double length,
                                  double noise_var) {
  x_ = x;
  y_ = y;
  mean_ = y.size() ? y.mean() : 0.0;
  signal_var_ = signal_var;
  length_ = length;
  noise_var_ = noise_var;
  factor();
}

void GaussianProcess1D::factor() {
  const Vec yc = y_.array() - mean_;
  GpEval e = evaluate_gp(x_, yc, signal_var_, length_, noise_var_);
  if (!std::isfinite(e.lml)) throw Error("GP kernel matrix is not positive definite even with jitter");
  lml_ = e.lml;
  jitter_ = e.jitter;
  alpha_ = e.alpha;
}

double GaussianProcess1D::predict(double x) const {
  double m = mean_;
  for (Eigen::Index i = 0; i < x_.size(); ++i) m += matern52(x - x_[i], signal_var_, length_) * alpha_[i];
  return m;
}

Vec GaussianProcess1D::predict(const Vec& x) const {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = predict(x[i]);
  return out;
}

RedundancySurrogate fit_redundancy_surrogate(const std::vector<Vec3>& node_coords,
                                             const Mat& temperatures, int n_pairs,
                                             std::uint64_t seed) {
  const auto nn = static_cast<int>(node_coords.size());
  if (nn < 2) throw Error("redundancy surrogate needs at least two nodes");
  const long long max_pairs = static_cast<long long>(nn) * (nn - 1) / 2;
  n_pairs = static_cast<int>(std::min<long long>(n_pairs, max_pairs));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, nn - 1);
  std::set<std::pair<int, int>> pairs;
  while (static_cast<int>(pairs.size()) < n_pairs) {
    int a = pick(rng), b = pick(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    pairs.insert({a, b});
  }
  RedundancySurrogate s;
  s.pair_distances.resize(n_pairs);
  s.pair_mi.resize(n_pairs);
  int i = 0;
  for (auto [a, b] : pairs) {
    s.pair_distances[i] = (node_coords[static_cast<std::size_t>(a)] - node_coords[static_cast<std::size_t>(b)]).norm();
    s.pair_mi[i] = mutual_information_cc(temperatures.col(a), temperatures.col(b));
    ++i;
  }
  s.gp.fit(s.pair_distances, s.pair_mi);
  return s;
}

Vec relevance_scores(const Mat& temperatures, const std::vector<int>& labels, int workers) {
  Vec rel(temperatures.cols());
  parallel_for(static_cast<std::size_t>(temperatures.cols()), workers, [&](std::size_t j) {
    rel[static_cast<Eigen::Index>(j)] = mutual_information_cd(temperatures.col(static_cast<Eigen::Index>(j)), labels);
  });
  return rel;
}

FeatureSelection geostat_mrmr(const Vec& relevance,
                              const std::function<double(double)>& surrogate,
                              const std::vector<Vec3>& node_coords, double threshold, int k) {
  FeatureSelection out;
  out.relevance = relevance;
  for (Eigen::Index i = 0; i < relevance.size(); ++i)
    if (relevance[i] >= threshold) out.preselected.push_back(static_cast<int>(i));
  if (out.preselected.empty()) throw Error("no feature reaches the relevance threshold");
  if (k > static_cast<int>(out.preselected.size()))
    throw Error("requested " + std::to_string(k) + " features but only " +
                std::to_string(out.preselected.size()) + " pass the relevance threshold");
  std::vector<char> taken(out.preselected.size(), 0);
  while (static_cast<int>(out.selected.size()) < k) {
    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < out.preselected.size(); ++a) {
      if (taken[a]) continue;
      const int f = out.preselected[a];
      double red = 0.0;
      for (int s : out.selected)
        red += surrogate((node_coords[static_cast<std::size_t>(f)] - node_coords[static_cast<std::size_t>(s)]).norm());
      if (!out.selected.empty()) red /= static_cast<double>(out.selected.size());
      const double score = relevance[f] - red;
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    taken[best] = 1;
    out.selected.push_back(out.preselected[best]);
  }
  return out;
}

}  // namespace romnet
