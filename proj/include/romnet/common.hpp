#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace romnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an iterative solve fails; carries the failing index
/// (time step, integration point) for diagnostics.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, int index)
      : Error(what), index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// Runs fn(i) for i in [0, n) over `workers` threads. Each index writes to its
/// own slot, so results do not depend on the worker count.
inline void parallel_for(std::size_t n, int workers,
                         const std::function<void(std::size_t)>& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(nw);
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += nw) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Symmetric tensors are stored as (11, 22, 33, 23, 13, 12) tensor components.
inline double ddot(const Vec6& a, const Vec6& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2] +
         2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5]);
}

inline Vec6 identity6() {
  Vec6 v;
  v << 1, 1, 1, 0, 0, 0;
  return v;
}

/// Von Mises equivalent stress sqrt(3/2 s:s) of a symmetric stress.
inline double von_mises(const Vec6& sigma) {
  const double p = (sigma[0] + sigma[1] + sigma[2]) / 3.0;
  Vec6 s = sigma - p * identity6();
  return std::sqrt(1.5 * ddot(s, s));
}

/// 64-bit FNV-1a, used for artifact hashes.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace romnet
