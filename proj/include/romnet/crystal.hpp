#pragma once

// Monocrystal elasto-viscoplastic constitutive integrator: cubic Hooke law,
// 12 octahedral + 6 cubic slip systems with a hyperbolic-sine flow rule,
// kinematic hardening with static recovery and isotropic hardening.

#include "romnet/common.hpp"

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace romnet {

enum class SlipFamily { Octahedral, Cubic };

struct SlipSystem {
  Vec3 normal;
  Vec3 direction;
  Vec6 orientation;  // sym(l (x) n)
  SlipFamily family;
};

inline constexpr int kNumOctahedral = 12;
inline constexpr int kNumCubic = 6;
inline constexpr int kNumSlip = kNumOctahedral + kNumCubic;

using SlipSystemSet = std::array<SlipSystem, kNumSlip>;

/// Canonical FCC set: {111}<110> first, then {100}<110>, all normalized.
SlipSystemSet build_slip_systems();

/// Shared instance of build_slip_systems().
const SlipSystemSet& slip_systems();

/// Schmid law tau = sigma : m.
inline double resolved_shear_stress(const Vec6& sigma, const SlipSystem& s) {
  return ddot(sigma, s.orientation);
}

/// Piecewise-linear table keyed by temperature. Lookups outside the key
/// range throw.
class TemperatureTable {
 public:
  TemperatureTable() = default;
  explicit TemperatureTable(double constant) : keys_{0.0, 1e6}, values_{constant, constant} {}
  TemperatureTable(std::vector<double> keys, std::vector<double> values);

  double at(double temperature) const;
  const std::vector<double>& keys() const { return keys_; }
  const std::vector<double>& values() const { return values_; }

 private:
  std::vector<double> keys_;
  std::vector<double> values_;
};

struct FamilyParams {
  TemperatureTable eps_h{1e-6};  // reference slip rate
  TemperatureTable k_h{100.0};   // viscous stress scale
  TemperatureTable n_h{3.0};
  TemperatureTable c{0.0};       // kinematic hardening modulus
  TemperatureTable d{0.0};       // dynamic recovery
  TemperatureTable big_m{1.0};   // static recovery stress scale (M)
  TemperatureTable m{1.0};       // static recovery exponent
  TemperatureTable r0{100.0};
  TemperatureTable q{0.0};
  TemperatureTable b{0.0};
};

struct MaterialParams {
  TemperatureTable c11{250e3};
  TemperatureTable c12{160e3};
  TemperatureTable c44{130e3};
  TemperatureTable alpha{1.5e-5};
  double reference_temperature = 293.0;
  FamilyParams octahedral;
  FamilyParams cubic;
};

/// Coefficients of one family evaluated at a temperature.
struct FamilyCoefficients {
  double eps_h, k_h, n_h, c, d, big_m, m, r0, q, b;
};

FamilyCoefficients evaluate(const FamilyParams& p, double temperature);

/// Cubic stiffness in the crystal frame acting on tensor components.
Mat6 cubic_stiffness(double c11, double c12, double c44);

struct MaterialState {
  Vec6 plastic_strain = Vec6::Zero();
  std::array<double, kNumSlip> back_stress{};
  std::array<double, kNumSlip> cumulated_slip{};
  double p_cum_oct = 0.0;
  // Last converged total strain and temperature; needed for sub-stepping.
  Vec6 total_strain = Vec6::Zero();
  double temperature = 293.0;
};

struct IntegrationOptions {
  double tolerance = 1e-10;
  int max_iterations = 60;
  int max_halvings = 8;
  bool elastic_only = false;
};

struct PointResult {
  Vec6 stress;
  MaterialState state;
  bool plastic = false;
  int substeps = 1;
  int sinh_caps = 0;        // number of times the sinh argument hit its cap
  double dissipation = 0.0; // sum_s (tau_s - x_s) dgamma_s
  std::array<double, kNumSlip> slip_increment{};
};

/// Backward-Euler update from `state` to the total strain `strain_new` at
/// temperature `temperature_new` over `dt`. Throws ConvergenceError when the
/// local Newton solve fails after all sub-step halvings.
PointResult integrate_point(const MaterialState& state, const Vec6& strain_new,
                            double temperature_new, double dt,
                            const MaterialParams& params,
                            const IntegrationOptions& options = {});

/// Forward-difference tangent d sigma / d eps in engineering-shear Voigt
/// form (so that it maps B u to stress components).
Mat6 numerical_tangent(const MaterialState& state, const Vec6& strain_new,
                       double temperature_new, double dt,
                       const MaterialParams& params, const IntegrationOptions& options,
                       const PointResult& base);

/// Thermal strain alpha(T) (T - T0) on the diagonal.
Vec6 thermal_strain(const MaterialParams& params, double temperature);

}  // namespace romnet
