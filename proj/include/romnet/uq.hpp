#pragma once

// Monte Carlo statistics: quantities of interest over the zone of interest,
// estimators, asymptotic confidence intervals, kernel density estimates and
// ROM-versus-HFM error indicators.

#include "romnet/common.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace romnet {

struct ZoneOfInterest {
  std::vector<int> ips;        // ascending
  double threshold_fraction = 0.4;
  double reference_max = 0.0;  // max p_cum on the reference loading
};

/// IPs where reference p_cum >= fraction * max(reference p_cum).
ZoneOfInterest make_zone(const Vec& reference_p_cum, double fraction = 0.4);

/// IP-volume-weighted average of `field` over the zone.
double zone_average(const Vec& field, const Vec& ip_weights, const ZoneOfInterest& zone);

struct Qoi {
  double p_cum = 0.0;     // zone average of p_cum at the end of the cycle
  double sigma_eq = 0.0;  // zone average of von Mises stress at maximum speed
};

/// `stress` is 6 x nip (tensor components) at the maximum-speed step.
Qoi extract_qoi(const Vec& p_cum, const Mat& stress, const Vec& ip_weights, const ZoneOfInterest& zone);

/// Von Mises field of a 6 x nip stress matrix.
Vec von_mises_columns(const Mat& stress);

struct Estimate {
  int n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
};

Estimate estimate(const std::vector<double>& samples);

struct Interval {
  double lower = 0.0, upper = 0.0;
  double width() const { return upper - lower; }
};

/// mean -/+ Phi^-1(1 - alpha/2) sqrt(S^2 / n). Needs n >= 2.
Interval confidence_interval(const std::vector<double>& samples, double alpha);

double silverman_bandwidth(const std::vector<double>& samples);

/// Gaussian KDE with Silverman's bandwidth evaluated on `grid`.
Vec kde(const std::vector<double>& samples, const Vec& grid);

struct Histogram {
  Vec edges;   // bins + 1
  Vec counts;
};

Histogram histogram(const std::vector<double>& samples, int bins);

/// Indices of strict interior local maxima of a sampled curve.
std::vector<int> local_maxima(const Vec& curve);

struct FieldErrors {
  double l2_omega = 0.0;       // weighted L2 relative error over all IPs
  double l2_zone = 0.0;        // same over the zone
  double linf_omega = 0.0;     // max |rom - hf| / max |hf|
  double linf_zone = 0.0;
  double average_error = 0.0;  // relative error on the zone average
  double max_distance = 0.0;   // distance between argmax IP positions
};

FieldErrors error_indicators(const Vec& rom, const Vec& hf, const Vec& ip_weights,
                             const std::vector<Vec3>& ip_positions, const ZoneOfInterest& zone);

/// Result of one Monte Carlo draw.
struct DrawResult {
  bool ok = false;
  std::string error;
  std::array<double, 5> chi{};
  int cluster = -1;
  Qoi qoi;
  double seconds = 0.0;
};

struct UqReport {
  int requested = 0;
  int failures = 0;
  std::vector<DrawResult> draws;
  Estimate p_cum, sigma_eq;
  Interval p_cum_95, p_cum_99, sigma_eq_95, sigma_eq_99;
  double wall_seconds = 0.0;

  std::vector<double> p_cum_samples() const;
  std::vector<double> sigma_eq_samples() const;
  std::string summary() const;
};

/// Draws n points of the unit 5-cube from mt19937_64(seed) upfront, evaluates
/// `evaluate` on each over `workers` threads (each draw writes its own slot)
/// and assembles the estimators. Failed draws are excluded and counted.
UqReport run_monte_carlo(int n_draws, std::uint64_t seed, int workers,
                         const std::function<DrawResult(const std::array<double, 5>&)>& evaluate);

}  // namespace romnet
