#pragma once

#include "romnet/fem.hpp"

#include <vector>

namespace romnet {

/// Full-order solution over one loading cycle. Column k of each matrix is the
/// state at t_k (column 0 is the unloaded initial state).
struct Trajectory {
  std::vector<double> times;
  Mat displacement;   // ndof x (steps + 1)
  Mat stress;         // 6 * n_ip x (steps + 1), IP-major
  Mat p_cum;          // n_ip x (steps + 1)
  std::vector<MaterialState> final_states;
  int newton_iterations = 0;
  int bisections = 0;
  int sinh_caps = 0;
  double wall_seconds = 0.0;

  int num_steps() const { return static_cast<int>(times.size()) - 1; }
  Vec6 stress_at(int step, std::size_t ip) const {
    return stress.col(step).segment<6>(6 * static_cast<Eigen::Index>(ip));
  }
  /// Von Mises field over IPs at a step.
  Vec von_mises_field(int step) const;
  /// Single stress component over IPs at a step.
  Vec stress_component(int step, int component) const;
};

struct SolverOptions {
  double relative_tolerance = 1e-8;
  double absolute_tolerance = 1e-12;
  int max_iterations = 25;
  int max_bisections = 3;
  int workers = 1;
};

/// Nodal temperature (1 - omega) T0 + omega T_max.
Vec temperature_at(const Vec& t_max, double omega, double reference_temperature);

/// Quasi-static Newton solve of every step of the cycle for the temperature
/// field `t_max`. Throws ConvergenceError carrying the failed step index.
Trajectory solve_cycle(const FemModel& model, const Vec& t_max, const SolverOptions& options = {});

}  // namespace romnet
