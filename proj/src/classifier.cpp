#include "romnet/classifier.hpp"

#include "romnet/gappy.hpp"

#include <cstdio>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace romnet {

namespace {

double log1pexp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Problem {
  const Mat& x;
  Vec y;  // 0/1
  LogisticOptions opt;

  double smooth(const Vec& w, double b) const {
    const Vec z = (x * w).array() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) loss += log1pexp(z[i]) - y[i] * z[i];
    return opt.c * loss + 0.5 * (1.0 - opt.l1_ratio) * w.squaredNorm();
  }
  void gradient(const Vec& w, double b, Vec& gw, double& gb) const {
    Vec r = (x * w).array() + b;
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = sigmoid(r[i]) - y[i];
    gw = opt.c * (x.transpose() * r) + (1.0 - opt.l1_ratio) * w;
    gb = opt.c * r.sum();
  }
  double penalty(const Vec& w) const { return opt.l1_ratio * w.lpNorm<1>(); }
};

}  // namespace

Vec fit_binary_logistic(const Mat& x, const std::vector<int>& y01, const LogisticOptions& opt,
                        double* objective) {
  const Eigen::Index p = x.cols();
  Problem prob{x, Vec(x.rows()), opt};
  for (Eigen::Index i = 0; i < x.rows(); ++i) prob.y[i] = y01[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  Vec w = Vec::Zero(p);
  // Start the intercept at the log-odds of the base rate.
  const double rate = std::clamp(prob.y.mean(), 1e-6, 1.0 - 1e-6);
  double b = std::log(rate / (1.0 - rate));
  double step = 1.0;
  double f = prob.smooth(w, b);
  double obj = f + prob.penalty(w);
  Vec gw;
  double gb = 0.0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    prob.gradient(w, b, gw, gb);
    Vec wn;
    double bn = 0.0, fn = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      const Vec v = w - step * gw;
      const double thr = step * opt.l1_ratio;
      wn = v.unaryExpr([thr](double a) { return a > thr ? a - thr : (a < -thr ? a + thr : 0.0); });
      bn = b - step * gb;
      fn = prob.smooth(wn, bn);
      const Vec dw = wn - w;
      const double db = bn - b;
      const double model = f + gw.dot(dw) + gb * db + (dw.squaredNorm() + db * db) / (2.0 * step);
      if (fn <= model + 1e-12 * std::abs(model)) break;
      step *= 0.5;
    }
    const double obj_new = fn + prob.penalty(wn);
    const double decrease = obj - obj_new;
    w = wn;
    b = bn;
    f = fn;
    obj = obj_new;
    if (std::abs(decrease) <= opt.tol * std::max(1.0, std::abs(obj))) break;
    step *= 1.5;
  }
  if (objective) *objective = obj;
  Vec out(p + 1);
  out << w, b;
  return out;
}

Classifier fit_classifier(const Mat& x, const std::vector<int>& y, const LogisticOptions& opt) {
  if (x.rows() != static_cast<Eigen::Index>(y.size())) throw Error("classifier: sample count mismatch");
  std::set<int> cls(y.begin(), y.end());
  if (cls.size() < 2) throw Error("classifier needs at least two classes in the training labels");
  Classifier out;
  out.classes.assign(cls.begin(), cls.end());
  out.c = opt.c;
  out.l1_ratio = opt.l1_ratio;
  const Vec mean = x.colwise().mean();
  Vec scale(x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt((x.col(j).array() - mean[j]).square().mean());
    scale[j] = sd > 0.0 ? sd : 1.0;
  }
  const Mat xs = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
  const int n_models = out.classes.size() == 2 ? 1 : static_cast<int>(out.classes.size());
  out.weights.resize(x.cols(), n_models);
  out.intercept.resize(n_models);
  for (int m = 0; m < n_models; ++m) {
    const int positive = n_models == 1 ? out.classes[1] : out.classes[static_cast<std::size_t>(m)];
    std::vector<int> y01(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y01[i] = y[i] == positive;
    const Vec wb = fit_binary_logistic(xs, y01, opt);
    const Vec ws = wb.head(x.cols());
    out.weights.col(m) = ws.cwiseQuotient(scale);
    out.intercept[m] = wb[x.cols()] - out.weights.col(m).dot(mean);
  }
  return out;
}

Vec Classifier::predict_proba(const Vec& features) const {
  const Vec z = weights.transpose() * features + intercept;
  Vec p(static_cast<Eigen::Index>(classes.size()));
  if (classes.size() == 2) {
    p[1] = sigmoid(z[0]);
    p[0] = 1.0 - p[1];
    return p;
  }
  for (Eigen::Index m = 0; m < z.size(); ++m) p[m] = sigmoid(z[m]);
  const double s = p.sum();
  if (s > 0.0) return p / s;
  return Vec::Constant(p.size(), 1.0 / static_cast<double>(p.size()));
}

int Classifier::predict(const Vec& features) const {
  const Vec p = predict_proba(features);
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p[i] > p[best]) best = i;
  return classes[static_cast<std::size_t>(best)];
}

double Classifier::sparsity() const {
  if (weights.size() == 0) return 0.0;
  return static_cast<double>((weights.array() == 0.0).count()) / static_cast<double>(weights.size());
}

Classifier train_classifier(const Mat& x, const std::vector<int>& y,
                            const std::vector<double>& c_grid, const std::vector<double>& l1_grid,
                            int folds, std::uint64_t seed) {
  if (c_grid.empty() || l1_grid.empty()) throw Error("classifier grid is empty");
  const auto n = static_cast<int>(y.size());
  const std::vector<int> fold = kfold_assignment(n, folds, seed);
  Mat scores(static_cast<Eigen::Index>(c_grid.size()), static_cast<Eigen::Index>(l1_grid.size()));
  for (std::size_t ic = 0; ic < c_grid.size(); ++ic) {
    for (std::size_t il = 0; il < l1_grid.size(); ++il) {
      LogisticOptions opt;
      opt.c = c_grid[ic];
      opt.l1_ratio = l1_grid[il];
      double acc = 0.0;
      for (int f = 0; f < folds; ++f) {
        std::vector<int> tr, te;
        for (int i = 0; i < n; ++i) (fold[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
        std::vector<int> ytr;
        for (int i : tr) ytr.push_back(y[static_cast<std::size_t>(i)]);
        const Mat xtr = x(tr, Eigen::all);
        int correct = 0;
        if (std::set<int>(ytr.begin(), ytr.end()).size() < 2) {
          for (int i : te) correct += y[static_cast<std::size_t>(i)] == ytr.front();
        } else {
          const Classifier cl = fit_classifier(xtr, ytr, opt);
          for (int i : te) correct += cl.predict(x.row(i).transpose()) == y[static_cast<std::size_t>(i)];
        }
        acc += te.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(te.size());
      }
      scores(static_cast<Eigen::Index>(ic), static_cast<Eigen::Index>(il)) = acc / folds;
    }
  }
  // Smaller C first, then larger l1: iterate in that preference order and
  // only replace on a strict improvement.
  std::vector<std::size_t> c_order(c_grid.size()), l_order(l1_grid.size());
  std::iota(c_order.begin(), c_order.end(), 0);
  std::iota(l_order.begin(), l_order.end(), 0);
  std::sort(c_order.begin(), c_order.end(), [&](auto a, auto b) { return c_grid[a] < c_grid[b]; });
  std::sort(l_order.begin(), l_order.end(), [&](auto a, auto b) { return l1_grid[a] > l1_grid[b]; });
  double best = -1.0;
  std::size_t bc = 0, bl = 0;
  for (auto ic : c_order)
    for (auto il : l_order) {
      const double s = scores(static_cast<Eigen::Index>(ic), static_cast<Eigen::Index>(il));
      if (s > best + 1e-12) {
        best = s;
        bc = ic;
        bl = il;
      }
    }
  LogisticOptions opt;
  opt.c = c_grid[bc];
  opt.l1_ratio = l1_grid[bl];
  Classifier out = fit_classifier(x, y, opt);
  out.folds = folds;
  out.seed = seed;
  out.cv_accuracy = best;
  out.c_grid = c_grid;
  out.l1_grid = l1_grid;
  out.cv_scores = scores;
  return out;
}

ClassificationReport classification_report(const std::vector<int>& truth,
                                           const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw Error("classification report: size mismatch");
  std::set<int> labels(truth.begin(), truth.end());
  labels.insert(predicted.begin(), predicted.end());
  std::vector<int> lab(labels.begin(), labels.end());
  auto index_of = [&](int l) {
    return static_cast<int>(std::lower_bound(lab.begin(), lab.end(), l) - lab.begin());
  };
  ClassificationReport r;
  const auto k = static_cast<int>(lab.size());
  r.confusion = Eigen::MatrixXi::Zero(k, k);
  for (std::size_t i = 0; i < truth.size(); ++i) r.confusion(index_of(truth[i]), index_of(predicted[i])) += 1;
  const auto n = static_cast<double>(truth.size());
  r.accuracy = n > 0 ? static_cast<double>(r.confusion.trace()) / n : 0.0;
  r.macro.label = -1;
  r.weighted.label = -2;
  for (int c = 0; c < k; ++c) {
    ClassMetrics m;
    m.label = lab[static_cast<std::size_t>(c)];
    const double tp = r.confusion(c, c);
    const double pred = r.confusion.col(c).sum();
    const double sup = r.confusion.row(c).sum();
    m.precision = pred > 0 ? tp / pred : 0.0;
    m.recall = sup > 0 ? tp / sup : 0.0;
    m.f1 = m.precision + m.recall > 0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.support = static_cast<int>(sup);
    r.per_class.push_back(m);
    r.macro.precision += m.precision / k;
    r.macro.recall += m.recall / k;
    r.macro.f1 += m.f1 / k;
    if (n > 0) {
      r.weighted.precision += m.precision * sup / n;
      r.weighted.recall += m.recall * sup / n;
      r.weighted.f1 += m.f1 * sup / n;
    }
  }
  r.macro.support = r.weighted.support = static_cast<int>(truth.size());
  return r;
}

std::string ClassificationReport::to_string() const {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10s %10s\n", "", "precision", "recall", "f1-score", "support");
  os << buf;
  for (const auto& m : per_class) {
    std::snprintf(buf, sizeof buf, "%-14d %10.4f %10.4f %10.4f %10d\n", m.label, m.precision, m.recall, m.f1, m.support);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10.4f %10d\n", "accuracy", "", "", accuracy, macro.support);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-14s %10.4f %10.4f %10.4f %10d\n", "macro avg", macro.precision, macro.recall, macro.f1, macro.support);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-14s %10.4f %10.4f %10.4f %10d\n", "weighted avg", weighted.precision, weighted.recall, weighted.f1, weighted.support);
  os << buf;
  return os.str();
}

Vec extract_features(const Vec& nodal_temperature, const std::vector<int>& selected_nodes) {
  Vec f(static_cast<Eigen::Index>(selected_nodes.size()));
  for (std::size_t i = 0; i < selected_nodes.size(); ++i) {
    const int n = selected_nodes[i];
    if (n < 0 || n >= nodal_temperature.size()) throw Error("selected node index out of range");
    f[static_cast<Eigen::Index>(i)] = nodal_temperature[n];
  }
  return f;
}

}  // namespace romnet
