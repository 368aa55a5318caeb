#include "romnet/classifier.hpp"
#include "romnet/config.hpp"
#include "romnet/features.hpp"
#include "romnet/thermal.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace romnet;

namespace {

std::vector<int> periodic_labels(int n) {
  std::vector<int> y;
  for (int i = 0; i < n; ++i) y.push_back(std::cos(0.7 * i) > 0 ? 1 : 0);
  return y;
}

}  // namespace

TEST(MutualInformation, IndependentFeature) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::bernoulli_distribution coin(0.5);
  Vec x(200);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    x[i] = g(rng);
    y.push_back(coin(rng));
  }
  const double mi = mutual_information_cd(x, y);
  EXPECT_GE(mi, 0.0);
  EXPECT_LE(mi, 0.05);
}

TEST(MutualInformation, LabelPlusTinyNoise) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Vec x(200);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    y.push_back(i % 2);
    x[i] = y.back() + 1e-3 * g(rng);
  }
  EXPECT_NEAR(mutual_information_cd(x, y), std::log(2.0), 0.1);
  EXPECT_EQ(mutual_information_cd(Vec::Constant(200, 3.0), y), 0.0);
}

TEST(MutualInformation, MatchesReferenceKnnEstimators) {
  // Reference values from scikit-learn (mutual_info_classif and
  // mutual_info_regression, n_neighbors = 3) on the same deterministic data.
  const std::vector<int> y = periodic_labels(40);
  Vec xc(40), x(40), z(40);
  for (int i = 0; i < 40; ++i) {
    xc[i] = y[static_cast<std::size_t>(i)] + 0.8 * std::sin(1.3 * i);
    x[i] = std::sin(1.3 * i);
    z[i] = x[i] * x[i] + 0.3 * std::cos(2.1 * i);
  }
  EXPECT_NEAR(mutual_information_cd(xc, y), 0.34694615349467606, 1e-6);
  EXPECT_NEAR(mutual_information_cc(x, z), 0.31791040767874446, 1e-6);
}

TEST(MutualInformation, NeverNegative) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u;
  for (int t = 0; t < 20; ++t) {
    Vec x(30), z(30);
    std::vector<int> y;
    for (int i = 0; i < 30; ++i) {
      x[i] = u(rng);
      z[i] = u(rng);
      y.push_back(u(rng) < 0.3);
    }
    EXPECT_GE(mutual_information_cd(x, y), 0.0);
    EXPECT_GE(mutual_information_cc(x, z), 0.0);
  }
}

TEST(GaussianProcess, InterpolatesNoiseFreeDecay) {
  const Vec d = Vec::LinSpaced(25, 0.0, 4.0);
  const Vec y = (-d.array()).exp();
  GaussianProcess1D gp;
  gp.fit(d, y);
  for (Eigen::Index i = 0; i < d.size(); ++i) EXPECT_NEAR(gp.predict(d[i]), y[i], 1e-3);
  for (double t : {0.37, 1.91, 3.33}) {
    EXPECT_NEAR(gp.predict(t), std::exp(-t), 1e-2);
    EXPECT_LE(std::abs(gp.predict(t + 1e-6) - gp.predict(t)), 1e-5);
  }
  GaussianProcess1D restored;
  restored.set_state(d, y, gp.signal_variance(), gp.length_scale(), gp.noise_variance());
  EXPECT_NEAR(restored.predict(1.234), gp.predict(1.234), 1e-12);
  EXPECT_THROW(gp.fit(Vec::Zero(1), Vec::Zero(1)), Error);
}

TEST(GaussianProcess, Matern52Values) {
  EXPECT_DOUBLE_EQ(matern52(0.0, 2.0, 1.0), 2.0);
  const double r = 0.7, l = 1.3, s = std::sqrt(5.0) * r / l;
  EXPECT_NEAR(matern52(r, 1.5, l), 1.5 * (1.0 + s + s * s / 3.0) * std::exp(-s), 1e-14);
  EXPECT_EQ(matern52(-r, 1.5, l), matern52(r, 1.5, l));
}

TEST(RedundancySurrogate, DecaysWithDistanceOnThermalModel) {
  const PipelineConfig cfg = parse_config(R"({"mesh": {"nx": 4, "ny": 2, "nz": 10, "foot_layers": 2}})");
  const Mesh mesh = generate_toy_blade_mesh(cfg.blade);
  const ThermalModel model = build_thermal_model(mesh, cfg.thermal, cfg.blade.root_chord);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  std::bernoulli_distribution coin(0.5);
  Mat temps(80, static_cast<Eigen::Index>(mesh.num_nodes()));
  for (int s = 0; s < 80; ++s)
    temps.row(s) = sample_temperature(model, {coin(rng) ? 1.0 : 0.0, g(rng), g(rng), g(rng), g(rng)}).t_max.transpose();
  const RedundancySurrogate r = fit_redundancy_surrogate(mesh.nodes, temps, 200, 5);
  EXPECT_EQ(r.pair_distances.size(), 200);
  EXPECT_GE(r.pair_mi.minCoeff(), 0.0);
  EXPECT_GE(r(0.0), r(r.pair_distances.maxCoeff()));
}

TEST(Mrmr, TrivialCases) {
  const std::vector<Vec3> coords{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0), Vec3(3, 0, 0), Vec3(4, 0, 0)};
  Vec rel(5);
  rel << 0.2, 0.9, 0.01, 0.5, 0.7;
  const FeatureSelection one = geostat_mrmr(rel, [](double) { return 0.3; }, coords, 0.05, 1);
  EXPECT_EQ(one.selected, std::vector<int>{1});
  EXPECT_EQ(one.preselected, (std::vector<int>{0, 1, 3, 4}));
  const FeatureSelection top = geostat_mrmr(rel, [](double) { return 0.0; }, coords, 0.05, 3);
  EXPECT_EQ(top.selected, (std::vector<int>{1, 4, 3}));
  EXPECT_THROW(geostat_mrmr(rel, [](double) { return 0.0; }, coords, 0.05, 5), Error);
  EXPECT_THROW(geostat_mrmr(rel, [](double) { return 0.0; }, coords, 0.95, 1), Error);
}

TEST(Mrmr, DuplicatedNodeIsPenalized) {
  // Node 1 duplicates node 0; nodes 1 and 2 have equal relevance.
  const std::vector<Vec3> coords{Vec3(0, 0, 0), Vec3(0, 0, 0), Vec3(5, 0, 0)};
  Vec rel(3);
  rel << 1.0, 0.5, 0.5;
  auto surrogate = [](double d) { return 2.0 * std::exp(-d); };
  const FeatureSelection s = geostat_mrmr(rel, surrogate, coords, 0.05, 2);
  EXPECT_EQ(s.selected, (std::vector<int>{0, 2}));
  // Mean redundancy over the selected set, by direct criterion evaluation.
  const FeatureSelection all = geostat_mrmr(rel, surrogate, coords, 0.05, 3);
  EXPECT_EQ(all.selected, (std::vector<int>{0, 2, 1}));
}

TEST(Logistic, MatchesReferenceElasticNetSolution) {
  // Reference weights from scikit-learn LogisticRegression(penalty
  // "elasticnet", solver "saga", C = 0.5, l1_ratio = 0.4, tol 1e-12).
  Mat x(30, 3);
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = std::sin(1.7 * i + 0.9 * j);
    y.push_back(x(i, 0) + 0.5 * x(i, 1) + 0.6 * std::sin(5.0 * i) > 0 ? 1 : 0);
  }
  LogisticOptions opt;
  opt.c = 0.5;
  opt.l1_ratio = 0.4;
  opt.tol = 1e-14;
  opt.max_iterations = 200000;
  const Vec wb = fit_binary_logistic(x, y, opt);
  EXPECT_NEAR(wb[0], 1.80185757, 1e-5);
  EXPECT_NEAR(wb[1], 0.6426371, 1e-5);
  EXPECT_NEAR(wb[2], -0.17410502, 1e-5);
  EXPECT_NEAR(wb[3], 0.02431381, 1e-5);
}

TEST(Logistic, SeparableToyIsFitExactly) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Mat x(20, 2);
  std::vector<int> y;
  for (int i = 0; i < 20; ++i) {
    const int c = i % 2;
    x(i, 0) = c ? 0.5 + std::abs(u(rng)) : -0.5 - std::abs(u(rng));
    x(i, 1) = u(rng);
    y.push_back(c);
  }
  LogisticOptions opt;
  opt.c = 1.0;
  const Classifier clf = fit_classifier(x, y, opt);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(clf.predict(x.row(i).transpose()), y[static_cast<std::size_t>(i)]);
  for (int i = 0; i < 20; ++i) {
    const Vec p = clf.predict_proba(x.row(i).transpose());
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_LE(p.maxCoeff(), 1.0);
    EXPECT_NEAR(p.sum(), 1.0, 1e-12);
  }
  EXPECT_THROW(fit_classifier(x, std::vector<int>(20, 1), opt), Error);
}

TEST(Logistic, TotalShrinkagePredictsMajority) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  Mat x(30, 4);
  std::vector<int> y;
  for (int i = 0; i < 30; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = g(rng);
    y.push_back(i < 20 ? 2 : 5);
  }
  LogisticOptions opt;
  opt.c = 1e-9;
  const Classifier clf = fit_classifier(x, y, opt);
  EXPECT_LE(clf.weights.cwiseAbs().maxCoeff(), 1e-6);
  for (int i = 0; i < 30; ++i) EXPECT_EQ(clf.predict(x.row(i).transpose()), 2);
}

TEST(Logistic, LassoLimitIsSparse) {
  // 11 features, labels driven by the first 5.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Mat x(200, 11);
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 11; ++j) x(i, j) = g(rng);
    const double s = x(i, 0) + 0.8 * x(i, 1) - 0.9 * x(i, 2) + 0.7 * x(i, 3) - x(i, 4) + 0.3 * g(rng);
    y.push_back(s > 0);
  }
  LogisticOptions opt;
  opt.c = 0.1;
  opt.l1_ratio = 1.0;
  const Classifier clf = fit_classifier(x, y, opt);
  EXPECT_GE(clf.sparsity(), 0.5);
  for (int j = 0; j < 5; ++j) EXPECT_NE(clf.weights(j, 0), 0.0) << j;
}

TEST(Logistic, CrossValidatedGridIsDeterministic) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  Mat x(60, 3);
  std::vector<int> y;
  for (int i = 0; i < 60; ++i) {
    for (int j = 0; j < 3; ++j) x(i, j) = g(rng);
    y.push_back(x(i, 0) - x(i, 1) + 0.5 * g(rng) > 0);
  }
  const std::vector<double> cg{0.01, 0.1, 1.0}, lg{0.0, 0.4, 1.0};
  const Classifier a = train_classifier(x, y, cg, lg, 5, 3), b = train_classifier(x, y, cg, lg, 5, 3);
  EXPECT_EQ(a.c, b.c);
  EXPECT_EQ(a.l1_ratio, b.l1_ratio);
  EXPECT_TRUE(a.weights == b.weights);
  EXPECT_EQ(a.cv_scores.rows(), 3);
  EXPECT_EQ(a.cv_scores.cols(), 3);
  EXPECT_DOUBLE_EQ(a.cv_accuracy, a.cv_scores.maxCoeff());
  EXPECT_GE(a.cv_accuracy, 0.8);
}

TEST(Logistic, IgnoresNonSelectedNodes) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> g;
  const std::vector<int> selected{1, 4};
  Mat x(40, 2);
  std::vector<int> y;
  std::vector<Vec> fields;
  for (int i = 0; i < 40; ++i) {
    Vec t(6);
    for (int j = 0; j < 6; ++j) t[j] = 300.0 + 10.0 * g(rng);
    fields.push_back(t);
    x.row(i) = extract_features(t, selected).transpose();
    y.push_back(t[1] > t[4]);
  }
  const Classifier clf = fit_classifier(x, y, LogisticOptions{});
  for (const Vec& t : fields) {
    Vec shifted = t;
    shifted[0] += 100.0;
    shifted[5] -= 40.0;
    EXPECT_EQ(clf.predict(extract_features(shifted, selected)), clf.predict(extract_features(t, selected)));
    EXPECT_TRUE(clf.predict_proba(extract_features(shifted, selected)) == clf.predict_proba(extract_features(t, selected)));
  }
  EXPECT_THROW(extract_features(Vec::Zero(3), selected), Error);
}

TEST(ClassificationReport, FourSampleToy) {
  const ClassificationReport r = classification_report({0, 0, 1, 1}, {0, 1, 1, 1});
  ASSERT_EQ(r.per_class.size(), 2u);
  EXPECT_DOUBLE_EQ(r.per_class[0].precision, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[0].recall, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class[0].f1, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].precision, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].recall, 1.0);
  EXPECT_DOUBLE_EQ(r.per_class[1].f1, 0.8);
  EXPECT_EQ(r.per_class[0].support, 2);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.macro.precision, 5.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.macro.recall, 0.75);
  EXPECT_DOUBLE_EQ(r.macro.f1, (2.0 / 3.0 + 0.8) / 2.0);
  EXPECT_DOUBLE_EQ(r.weighted.f1, r.macro.f1);
  EXPECT_EQ(r.confusion(0, 1), 1);
  EXPECT_EQ(r.confusion(1, 1), 2);
  const std::string s = r.to_string();
  for (const char* col : {"precision", "recall", "f1-score", "support", "accuracy", "macro avg", "weighted avg"})
    EXPECT_NE(s.find(col), std::string::npos) << col;
}

TEST(ClassificationReport, UnevenSupportWeights) {
  const ClassificationReport r = classification_report({0, 0, 0, 1}, {0, 0, 1, 1});
  // class 0: p 1, r 2/3, f1 0.8; class 1: p 1/2, r 1, f1 2/3
  EXPECT_DOUBLE_EQ(r.weighted.precision, 0.75 * 1.0 + 0.25 * 0.5);
  EXPECT_NEAR(r.weighted.f1, 0.75 * 0.8 + 0.25 * 2.0 / 3.0, 1e-15);
}
