#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "hfgp/error.hpp"

namespace hfgp {

struct Box {
  std::vector<double> lower;
  std::vector<double> upper;

  [[nodiscard]] std::vector<double> project(std::vector<double> x) const {
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = std::clamp(x[k], lower[k], upper[k]);
    return x;
  }
  [[nodiscard]] bool contains(const std::vector<double>& x) const {
    for (std::size_t k = 0; k < x.size(); ++k)
      if (x[k] < lower[k] || x[k] > upper[k]) return false;
    return true;
  }
};

struct SimplexResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct SimplexOptions {
  double rel_diameter = 1e-8;
  std::size_t max_iterations = 2000;
  double initial_step = 0.1;  // relative to |x0_k|, or absolute when x0_k == 0
};

/// Nelder-Mead with every trial point projected onto the box.
///
/// A ParameterDomainError (or DegenerateVarianceError) from the objective
/// counts as +inf. A NaN objective throws NumericalError.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& objective,
                                 std::vector<double> x0, const Box& box, const SimplexOptions& opt = {}) {
  const std::size_t d = x0.size();
  if (box.lower.size() != d || box.upper.size() != d) throw ConfigError("bounds dimension mismatch");
  if (!box.contains(x0)) throw ConfigError("initial point is outside the bounds");

  auto eval = [&](const std::vector<double>& x) {
    double v;
    try {
      v = objective(x);
    } catch (const ParameterDomainError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const DegenerateVarianceError&) {
      return std::numeric_limits<double>::infinity();
    }
    if (std::isnan(v)) throw NumericalError("objective returned NaN");
    return v;
  };

  std::vector<std::vector<double>> simplex{x0};
  for (std::size_t k = 0; k < d; ++k) {
    auto v = x0;
    const double step = x0[k] != 0.0 ? opt.initial_step * std::abs(x0[k]) : opt.initial_step;
    v[k] += step;
    if (v[k] > box.upper[k]) v[k] = x0[k] - step;
    simplex.push_back(box.project(v));
  }
  std::vector<double> f(simplex.size());
  for (std::size_t j = 0; j < simplex.size(); ++j) f[j] = eval(simplex[j]);
  if (!std::isfinite(f[0])) throw NumericalError("objective is not finite at the initial point");

  std::vector<std::size_t> order(d + 1);
  auto affine = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> out(d);
    for (std::size_t k = 0; k < d; ++k) out[k] = a[k] + t * (b[k] - a[k]);
    return box.project(out);
  };

  SimplexResult result;
  std::size_t it = 0;
  for (; it < opt.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    // stable: ties keep the earlier vertex first
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    const auto& best = simplex[order.front()];

    double diameter = 0.0, scale = 0.0;
    for (double v : best) scale = std::max(scale, std::abs(v));
    for (const auto& v : simplex)
      for (std::size_t k = 0; k < d; ++k) diameter = std::max(diameter, std::abs(v[k] - best[k]));
    if (diameter <= opt.rel_diameter * std::max(scale, 1e-12)) {
      result.converged = true;
      break;
    }

    const std::size_t worst = order.back();
    std::vector<double> centroid(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) centroid[k] += simplex[order[j]][k] / static_cast<double>(d);

    const auto reflected = affine(centroid, simplex[worst], -1.0);
    const double fr = eval(reflected);
    const double f_best = f[order.front()];
    const double f_second_worst = f[order[d - 1]];
    if (fr < f_best) {
      const auto expanded = affine(centroid, simplex[worst], -2.0);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        f[worst] = fe;
      } else {
        simplex[worst] = reflected;
        f[worst] = fr;
      }
      continue;
    }
    if (fr < f_second_worst) {
      simplex[worst] = reflected;
      f[worst] = fr;
      continue;
    }
    const bool outside = fr < f[worst];
    const auto contracted = affine(centroid, outside ? reflected : simplex[worst], 0.5);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : f[worst])) {
      simplex[worst] = contracted;
      f[worst] = fc;
      continue;
    }
    const auto anchor = simplex[order.front()];
    for (std::size_t j = 1; j <= d; ++j) {
      simplex[order[j]] = affine(anchor, simplex[order[j]], 0.5);
      f[order[j]] = eval(simplex[order[j]]);
    }
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < f.size(); ++j)
    if (f[j] < f[best]) best = j;
  result.x = simplex[best];
  result.value = f[best];
  result.iterations = it;
  return result;
}

}  // namespace hfgp
