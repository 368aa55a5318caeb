#include "romnet/doe.hpp"

#include <random>

namespace romnet {

namespace {

// Joe & Kuo (new-joe-kuo-6.21201) primitive polynomials, encoded with both
// the leading and trailing bit, and their initial direction numbers.
constexpr std::array<std::uint32_t, kSobolMaxDim> kPoly = {
    1, 3, 7, 11, 13, 19, 25, 37, 41, 47, 55, 59, 61, 67, 91, 97, 103, 109, 115, 131, 137};

constexpr std::array<std::array<std::uint32_t, 7>, kSobolMaxDim> kInit = {{
    {1, 0, 0, 0, 0, 0, 0},      {1, 0, 0, 0, 0, 0, 0},      {1, 3, 0, 0, 0, 0, 0},
    {1, 3, 1, 0, 0, 0, 0},      {1, 1, 1, 0, 0, 0, 0},      {1, 1, 3, 3, 0, 0, 0},
    {1, 3, 5, 13, 0, 0, 0},     {1, 1, 5, 5, 17, 0, 0},     {1, 1, 5, 5, 5, 0, 0},
    {1, 1, 7, 11, 19, 0, 0},    {1, 1, 5, 1, 1, 0, 0},      {1, 1, 1, 3, 11, 0, 0},
    {1, 3, 5, 5, 31, 0, 0},     {1, 3, 3, 9, 7, 49, 0},     {1, 1, 1, 15, 21, 21, 0},
    {1, 3, 1, 13, 27, 49, 0},   {1, 1, 1, 15, 7, 5, 0},     {1, 3, 1, 15, 13, 25, 0},
    {1, 1, 5, 5, 19, 61, 0},    {1, 3, 7, 11, 23, 15, 103}, {1, 3, 7, 13, 13, 15, 69},
}};

constexpr int kBits = 32;

std::array<std::uint32_t, kBits> direction_numbers(int dim) {
  std::array<std::uint32_t, kBits> m{};
  if (dim == 0) {
    for (int k = 0; k < kBits; ++k) m[k] = 1;
  } else {
    const std::uint32_t poly = kPoly[static_cast<std::size_t>(dim)];
    int degree = 0;
    while ((poly >> (degree + 1)) != 0) ++degree;
    for (int k = 0; k < degree; ++k) m[k] = kInit[static_cast<std::size_t>(dim)][static_cast<std::size_t>(k)];
    for (int k = degree; k < kBits; ++k) {
      std::uint32_t v = m[k - degree] ^ (m[k - degree] << degree);
      for (int j = 1; j < degree; ++j)
        if ((poly >> (degree - j)) & 1u) v ^= m[k - j] << j;
      m[k] = v;
    }
  }
  std::array<std::uint32_t, kBits> v{};
  for (int k = 0; k < kBits; ++k) v[k] = m[k] << (kBits - 1 - k);
  return v;
}

int lowest_zero_bit(std::uint64_t x) {
  int c = 0;
  while (x & 1u) {
    x >>= 1;
    ++c;
  }
  return c;
}

}  // namespace

Design sobol(int n, int d, int skip) {
  if (d < 1 || d > kSobolMaxDim)
    throw Error("Sobol dimension " + std::to_string(d) + " outside the direction-number table (1.." +
                std::to_string(kSobolMaxDim) + ")");
  if (n < 0 || skip < 0) throw Error("Sobol point count and skip must be non-negative");
  Design out;
  out.kind = "sobol";
  out.points.resize(n, d);
  std::vector<std::array<std::uint32_t, kBits>> dirs;
  for (int j = 0; j < d; ++j) dirs.push_back(direction_numbers(j));
  std::vector<std::uint32_t> x(static_cast<std::size_t>(d), 0);
  const double scale = std::ldexp(1.0, -kBits);
  const std::uint64_t total = static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(skip);
  // x holds point i; point i + 1 flips the direction number of the lowest
  // zero bit of i.
  for (std::uint64_t i = 0; i < total; ++i) {
    if (i >= static_cast<std::uint64_t>(skip)) {
      const auto row = static_cast<Eigen::Index>(i - static_cast<std::uint64_t>(skip));
      for (int j = 0; j < d; ++j) out.points(row, j) = x[static_cast<std::size_t>(j)] * scale;
    }
    const int c = lowest_zero_bit(i);
    if (c >= kBits) throw Error("Sobol sequence exhausted");
    for (int j = 0; j < d; ++j) x[static_cast<std::size_t>(j)] ^= dirs[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)];
  }
  return out;
}

double maxproj_criterion(const Mat& points) {
  double psi = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      double prod = 1.0;
      for (Eigen::Index k = 0; k < points.cols(); ++k) {
        const double dx = points(i, k) - points(j, k);
        prod *= 1.0 / (dx * dx);
      }
      psi += prod;
    }
  return psi;
}

Design maxproj_lhs(int n, int d, std::uint64_t seed, int iterations) {
  if (n < 2) throw Error("maxproj_lhs needs at least 2 points");
  std::mt19937_64 rng(seed);
  Mat x(n, d);
  for (int k = 0; k < d; ++k) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) x(i, k) = (2.0 * perm[static_cast<std::size_t>(i)] + 1.0) / (2.0 * n);
  }

  // Pairwise products, kept up to date under swaps.
  Mat prod = Mat::Zero(n, n);
  auto pair_product = [&](int i, int j) {
    double p = 1.0;
    for (int k = 0; k < d; ++k) {
      const double dx = x(i, k) - x(j, k);
      p /= dx * dx;
    }
    return p;
  };
  double psi = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      prod(i, j) = prod(j, i) = pair_product(i, j);
      psi += prod(i, j);
    }

  Design best;
  best.kind = "maxproj_lhs";
  best.seed = seed;
  best.points = x;
  double best_psi = psi;
  if (d == 0 || iterations <= 0) return best;

  std::uniform_int_distribution<int> pick_row(0, n - 1);
  std::uniform_int_distribution<int> pick_col(0, d - 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double temperature = 0.05;
  const double cooling = std::pow(1e-3, 1.0 / iterations);
  Vec new_a(n), new_b(n);
  for (int it = 0; it < iterations; ++it, temperature *= cooling) {
    const int k = pick_col(rng);
    const int a = pick_row(rng);
    int b = pick_row(rng);
    if (a == b) continue;
    std::swap(x(a, k), x(b, k));
    double delta = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j != a) {
        new_a[j] = j == b ? prod(a, b) : pair_product(a, j);
        if (j != b) delta += new_a[j] - prod(a, j);
      }
      if (j != b) {
        new_b[j] = j == a ? prod(a, b) : pair_product(b, j);
        if (j != a) delta += new_b[j] - prod(b, j);
      }
    }
    const double candidate = psi + delta;
    const double log_ratio = std::log(candidate) - std::log(psi);
    if (log_ratio <= 0.0 || unif(rng) < std::exp(-log_ratio / temperature)) {
      for (int j = 0; j < n; ++j) {
        if (j != a && j != b) {
          prod(a, j) = prod(j, a) = new_a[j];
          prod(b, j) = prod(j, b) = new_b[j];
        }
      }
      psi = candidate;
      if (psi < best_psi) {
        best_psi = psi;
        best.points = x;
      }
    } else {
      std::swap(x(a, k), x(b, k));
    }
  }
  return best;
}

Design random_design(int n, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Design out;
  out.kind = "random";
  out.seed = seed;
  out.points.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < d; ++k) out.points(i, k) = unif(rng);
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error("normal quantile needs p in (0, 1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement; erfc keeps the tail residual accurate.
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

LoadingCoords to_loading_coords(const std::array<double, 5>& chi) {
  LoadingCoords out;
  out.upsilon[0] = chi[0] > 0.5 ? 1.0 : 0.0;
  constexpr double lo = 1e-12, hi = 1.0 - 1e-12;
  for (std::size_t i = 1; i < 5; ++i) {
    double c = chi[i];
    if (c < lo || c > hi) {
      c = std::clamp(c, lo, hi);
      out.clipped = true;
    }
    out.upsilon[i] = normal_quantile(c);
  }
  return out;
}

double star_discrepancy(const Mat& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  double worst = 0.0;
  for (Eigen::Index a = 0; a < n; ++a) {
    double volume = 1.0;
    for (Eigen::Index k = 0; k < d; ++k) volume *= points(a, k);
    int open_count = 0, closed_count = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      bool open = true, closed = true;
      for (Eigen::Index k = 0; k < d; ++k) {
        if (points(i, k) >= points(a, k)) open = false;
        if (points(i, k) > points(a, k)) closed = false;
      }
      open_count += open;
      closed_count += closed;
    }
    worst = std::max({worst, volume - static_cast<double>(open_count) / n,
                      static_cast<double>(closed_count) / n - volume});
  }
  return worst;
}

}  // namespace romnet
