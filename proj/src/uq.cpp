#include "romnet/uq.hpp"

#include "romnet/doe.hpp"

#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

namespace romnet {

ZoneOfInterest make_zone(const Vec& reference_p_cum, double fraction) {
  if (reference_p_cum.size() == 0) throw Error("zone of interest: empty reference field");
  ZoneOfInterest z;
  z.threshold_fraction = fraction;
  z.reference_max = reference_p_cum.maxCoeff();
  if (!(z.reference_max > 0.0)) throw Error("zone of interest: reference p_cum has no plastic point");
  for (Eigen::Index i = 0; i < reference_p_cum.size(); ++i)
    if (reference_p_cum[i] >= fraction * z.reference_max) z.ips.push_back(static_cast<int>(i));
  return z;
}

double zone_average(const Vec& field, const Vec& ip_weights, const ZoneOfInterest& zone) {
  if (zone.ips.empty()) throw Error("zone of interest is empty");
  double num = 0.0, den = 0.0;
  for (int i : zone.ips) {
    num += ip_weights[i] * field[i];
    den += ip_weights[i];
  }
  return num / den;
}

Vec von_mises_columns(const Mat& stress) {
  Vec out(stress.cols());
  for (Eigen::Index i = 0; i < stress.cols(); ++i) out[i] = von_mises(stress.col(i));
  return out;
}

Qoi extract_qoi(const Vec& p_cum, const Mat& stress, const Vec& ip_weights, const ZoneOfInterest& zone) {
  return {zone_average(p_cum, ip_weights, zone), zone_average(von_mises_columns(stress), ip_weights, zone)};
}

Estimate estimate(const std::vector<double>& samples) {
  Estimate e;
  e.n = static_cast<int>(samples.size());
  if (e.n == 0) return e;
  for (double s : samples) e.mean += s;
  e.mean /= e.n;
  if (e.n > 1) {
    for (double s : samples) e.variance += (s - e.mean) * (s - e.mean);
    e.variance /= (e.n - 1);
  }
  return e;
}

Interval confidence_interval(const std::vector<double>& samples, double alpha) {
  if (samples.size() < 2) throw Error("confidence interval needs at least two samples");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error("confidence level must be in (0, 1)");
  const Estimate e = estimate(samples);
  const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(e.variance / e.n);
  return {e.mean - half, e.mean + half};
}

double silverman_bandwidth(const std::vector<double>& samples) {
  if (samples.size() < 2) throw Error("KDE needs at least two samples");
  const Estimate e = estimate(samples);
  const double sd = std::sqrt(e.variance);
  std::vector<double> s = samples;
  std::sort(s.begin(), s.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0)) throw Error("KDE of samples with zero spread is undefined");
  return 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
}

Vec kde(const std::vector<double>& samples, const Vec& grid) {
  const double h = silverman_bandwidth(samples);
  const double norm = 1.0 / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * M_PI));
  Vec out = Vec::Zero(grid.size());
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    double s = 0.0;
    for (double x : samples) {
      const double u = (grid[g] - x) / h;
      s += std::exp(-0.5 * u * u);
    }
    out[g] = s * norm;
  }
  return out;
}

Histogram histogram(const std::vector<double>& samples, int bins) {
  if (samples.empty() || bins < 1) throw Error("histogram needs samples and at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  double lo = *lo_it, hi = *hi_it;
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.edges = Vec::LinSpaced(bins + 1, lo, hi);
  h.counts = Vec::Zero(bins);
  for (double s : samples) {
    auto b = static_cast<int>((s - lo) / (hi - lo) * bins);
    h.counts[std::clamp(b, 0, bins - 1)] += 1.0;
  }
  return h;
}

std::vector<int> local_maxima(const Vec& curve) {
  std::vector<int> out;
  for (Eigen::Index i = 1; i + 1 < curve.size(); ++i)
    if (curve[i] > curve[i - 1] && curve[i] >= curve[i + 1]) out.push_back(static_cast<int>(i));
  return out;
}

FieldErrors error_indicators(const Vec& rom, const Vec& hf, const Vec& ip_weights,
                             const std::vector<Vec3>& ip_positions, const ZoneOfInterest& zone) {
  if (rom.size() != hf.size() || hf.size() != ip_weights.size())
    throw Error("error indicators: field sizes differ");
  FieldErrors e;
  auto rel_l2 = [&](const std::vector<int>* subset) {
    double num = 0.0, den = 0.0;
    auto add = [&](Eigen::Index i) {
      num += ip_weights[i] * (rom[i] - hf[i]) * (rom[i] - hf[i]);
      den += ip_weights[i] * hf[i] * hf[i];
    };
    if (subset)
      for (int i : *subset) add(i);
    else
      for (Eigen::Index i = 0; i < hf.size(); ++i) add(i);
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  };
  auto rel_linf = [&](const std::vector<int>* subset) {
    double num = 0.0, den = 0.0;
    auto add = [&](Eigen::Index i) {
      num = std::max(num, std::abs(rom[i] - hf[i]));
      den = std::max(den, std::abs(hf[i]));
    };
    if (subset)
      for (int i : *subset) add(i);
    else
      for (Eigen::Index i = 0; i < hf.size(); ++i) add(i);
    return den > 0.0 ? num / den : num;
  };
  e.l2_omega = rel_l2(nullptr);
  e.l2_zone = rel_l2(&zone.ips);
  e.linf_omega = rel_linf(nullptr);
  e.linf_zone = rel_linf(&zone.ips);
  const double avg_hf = zone_average(hf, ip_weights, zone);
  const double avg_rom = zone_average(rom, ip_weights, zone);
  e.average_error = avg_hf != 0.0 ? std::abs(avg_rom - avg_hf) / std::abs(avg_hf) : std::abs(avg_rom);
  Eigen::Index arg_rom = 0, arg_hf = 0;
  rom.maxCoeff(&arg_rom);
  hf.maxCoeff(&arg_hf);
  e.max_distance = (ip_positions[static_cast<std::size_t>(arg_rom)] - ip_positions[static_cast<std::size_t>(arg_hf)]).norm();
  return e;
}

std::vector<double> UqReport::p_cum_samples() const {
  std::vector<double> s;
  for (const auto& d : draws)
    if (d.ok) s.push_back(d.qoi.p_cum);
  return s;
}

std::vector<double> UqReport::sigma_eq_samples() const {
  std::vector<double> s;
  for (const auto& d : draws)
    if (d.ok) s.push_back(d.qoi.sigma_eq);
  return s;
}

std::string UqReport::summary() const {
  std::ostringstream os;
  char buf[256];
  os << "draws requested: " << requested << "\n";
  os << "draws failed: " << failures << "\n";
  os << "draws used: " << p_cum.n << "\n";
  auto line = [&](const char* name, const Estimate& e, const Interval& i95, const Interval& i99) {
    std::snprintf(buf, sizeof buf, "%-10s mean %.6e  var %.6e  CI95 [%.6e, %.6e] (%.3f%%)  CI99 [%.6e, %.6e] (%.3f%%)\n",
                  name, e.mean, e.variance, i95.lower, i95.upper,
                  e.mean != 0.0 ? 100.0 * i95.width() / std::abs(e.mean) : 0.0, i99.lower, i99.upper,
                  e.mean != 0.0 ? 100.0 * i99.width() / std::abs(e.mean) : 0.0);
    os << buf;
  };
  if (p_cum.n >= 2) {
    line("p_cum", p_cum, p_cum_95, p_cum_99);
    line("sigma_eq", sigma_eq, sigma_eq_95, sigma_eq_99);
  }
  std::snprintf(buf, sizeof buf, "wall seconds: %.3f\n", wall_seconds);
  os << buf;
  return os.str();
}

UqReport run_monte_carlo(int n_draws, std::uint64_t seed, int workers,
                         const std::function<DrawResult(const std::array<double, 5>&)>& evaluate) {
  UqReport r;
  r.requested = std::max(0, n_draws);
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::array<double, 5>> chis(static_cast<std::size_t>(r.requested));
  for (auto& c : chis)
    for (double& v : c) v = unif(rng);
  r.draws.resize(chis.size());
  parallel_for(chis.size(), workers, [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    DrawResult d;
    try {
      d = evaluate(chis[i]);
    } catch (const std::exception& ex) {
      d.ok = false;
      d.error = ex.what();
    }
    d.chi = chis[i];
    d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.draws[i] = d;
  });
  for (const auto& d : r.draws) r.failures += d.ok ? 0 : 1;
  const auto ps = r.p_cum_samples();
  const auto ss = r.sigma_eq_samples();
  r.p_cum = estimate(ps);
  r.sigma_eq = estimate(ss);
  if (ps.size() >= 2) {
    r.p_cum_95 = confidence_interval(ps, 0.05);
    r.p_cum_99 = confidence_interval(ps, 0.01);
    r.sigma_eq_95 = confidence_interval(ss, 0.05);
    r.sigma_eq_99 = confidence_interval(ss, 0.01);
  }
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

}  // namespace romnet
