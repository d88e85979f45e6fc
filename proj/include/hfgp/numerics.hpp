#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "hfgp/error.hpp"

namespace hfgp::numerics {

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
};

// Adaptive Gauss-Kronrod on [a, b]; b may be +infinity.
// Throws NumericalError when the error estimate misses the requested
// relative tolerance (with an absolute floor for integrals close to 0).
inline QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                                  double rel_tol = 1e-10, double abs_floor = 1e-15) {
  if (a == b) return {};
  double err = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, 20, rel_tol, &err);
  if (!std::isfinite(value) || err > std::max(rel_tol * std::abs(value), abs_floor) * 10.0) {
    throw NumericalError("quadrature did not converge on [" + std::to_string(a) + ", " +
                         std::to_string(b) + "]: value " + std::to_string(value) +
                         ", error estimate " + std::to_string(err));
  }
  return {value, err};
}

// Nodes and weights for E[f(Z)], Z ~ N(0, 1) (probabilists' Hermite rule),
// computed with the Golub-Welsch eigenvalue method.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussHermiteRule gauss_hermite(std::size_t count) {
  const auto m = static_cast<Eigen::Index>(count);
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 1; k < m; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermiteRule rule;
  rule.nodes.resize(count);
  rule.weights.resize(count);
  for (Eigen::Index k = 0; k < m; ++k) {
    rule.nodes[k] = solver.eigenvalues()(k);
    const double v0 = solver.eigenvectors()(0, k);
    rule.weights[k] = v0 * v0;
  }
  return rule;
}

inline const GaussHermiteRule& gauss_hermite_64() {
  static const GaussHermiteRule rule = gauss_hermite(64);
  return rule;
}

// E[f(Z)] for Z ~ N(0, variance), 64-node rule.
inline double gaussian_expectation(const std::function<double(double)>& f, double variance) {
  const auto& rule = gauss_hermite_64();
  const double scale = std::sqrt(variance);
  double acc = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k) acc += rule.weights[k] * f(scale * rule.nodes[k]);
  return acc;
}

inline double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, p);
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc / static_cast<double>(x.size());
}

// Sample standard deviation with denominator (m - 1).
inline double sample_sd(std::span<const double> x) {
  if (x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  const double mu = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - mu) * (v - mu);
  return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

inline double pearson_correlation(std::span<const double> x, std::span<const double> y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace hfgp::numerics
