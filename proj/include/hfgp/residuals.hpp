#pragma once

#include <span>
#include <vector>

#include "hfgp/drift.hpp"
#include "hfgp/error.hpp"
#include "hfgp/simulate.hpp"

namespace hfgp {

inline void require_path(const PathSample& path) {
  if (path.values.size() < 2 || path.times.size() != path.values.size())
    throw ConfigError("path needs at least two observations with matching times");
  if (!(path.h > 0.0)) throw ConfigError("path step h must be positive");
}

/// Delta_i X = X_{t_i} - X_{t_{i-1}}, i = 1..n.
inline std::vector<double> increments(std::span<const double> x) {
  std::vector<double> d(x.size() > 0 ? x.size() - 1 : 0);
  for (std::size_t i = 1; i < x.size(); ++i) d[i - 1] = x[i] - x[i - 1];
  return d;
}

/// Delta_i X - mu_xi(t_{i-1}) h, i = 1..n (left-point drift convention).
inline std::vector<double> drift_residuals(const PathSample& path, const DriftModel& drift) {
  require_path(path);
  std::vector<double> r = increments(path.values);
  if (drift.dim() == 0) return r;
  for (std::size_t i = 1; i < path.values.size(); ++i) r[i - 1] -= drift_eval(drift, path.times[i - 1]) * path.h;
  return r;
}

inline double sum_of_powers(std::span<const double> x, int power) {
  double acc = 0.0;
  for (double v : x) {
    double p = 1.0;
    for (int k = 0; k < power; ++k) p *= v;
    acc += p;
  }
  return acc;
}

}  // namespace hfgp
