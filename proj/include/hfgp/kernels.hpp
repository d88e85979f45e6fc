#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hfgp/error.hpp"

namespace hfgp {

enum class KernelFamily { Gaussian, Matern, RationalQuadratic, ExponentialOU, MollifiedOU };

inline std::string_view family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::Gaussian: return "gaussian";
    case KernelFamily::Matern: return "matern";
    case KernelFamily::RationalQuadratic: return "rational_quadratic";
    case KernelFamily::ExponentialOU: return "exponential_ou";
    case KernelFamily::MollifiedOU: return "mollified_ou";
  }
  return "unknown";
}

inline KernelFamily parse_family(std::string_view name) {
  if (name == "gaussian" || name == "rbf") return KernelFamily::Gaussian;
  if (name == "matern") return KernelFamily::Matern;
  if (name == "rational_quadratic" || name == "rq") return KernelFamily::RationalQuadratic;
  if (name == "exponential_ou" || name == "ou" || name == "exponential") return KernelFamily::ExponentialOU;
  if (name == "mollified_ou") return KernelFamily::MollifiedOU;
  throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

inline std::span<const std::string_view> family_param_names(KernelFamily family) {
  static constexpr std::array<std::string_view, 2> two{"alpha", "beta"};
  static constexpr std::array<std::string_view, 3> matern{"alpha", "beta", "nu"};
  static constexpr std::array<std::string_view, 3> rq{"alpha", "beta", "gamma"};
  static constexpr std::array<std::string_view, 3> mollified{"alpha", "beta", "epsilon"};
  switch (family) {
    case KernelFamily::Matern: return matern;
    case KernelFamily::RationalQuadratic: return rq;
    case KernelFamily::MollifiedOU: return mollified;
    default: return two;
  }
}

/// Laplace mollifier phi_eps(s) = exp(-|s| / eps) / (2 eps).
struct LaplaceMollifier {
  double epsilon;

  explicit LaplaceMollifier(double eps) : epsilon(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ParameterDomainError("mollifier bandwidth must be positive");
  }

  [[nodiscard]] double density(double s) const { return std::exp(-std::abs(s) / epsilon) / (2.0 * epsilon); }
};

/// A stationary covariance kernel K(|t|) from one of the closed-form families.
///
/// Parameters are stored in the family's canonical order (see
/// family_param_names). Instances are validated on construction and are
/// immutable afterwards.
class KernelModel {
 public:
  KernelModel(KernelFamily family, std::vector<double> params) : family_(family), params_(std::move(params)) {
    validate();
  }

  static KernelModel gaussian(double alpha, double beta) { return {KernelFamily::Gaussian, {alpha, beta}}; }
  static KernelModel matern(double alpha, double beta, double nu) { return {KernelFamily::Matern, {alpha, beta, nu}}; }
  static KernelModel rational_quadratic(double alpha, double beta, double gamma) {
    return {KernelFamily::RationalQuadratic, {alpha, beta, gamma}};
  }
  static KernelModel exponential_ou(double alpha, double beta) { return {KernelFamily::ExponentialOU, {alpha, beta}}; }
  static KernelModel mollified_ou(double alpha, double beta, double epsilon) {
    return {KernelFamily::MollifiedOU, {alpha, beta, epsilon}};
  }

  [[nodiscard]] KernelFamily family() const { return family_; }
  [[nodiscard]] std::span<const double> params() const { return params_; }
  [[nodiscard]] double alpha() const { return params_[0]; }
  [[nodiscard]] double beta() const { return params_[1]; }
  // Third parameter (nu, gamma or epsilon); only meaningful for three-parameter families.
  [[nodiscard]] double third() const { return params_.at(2); }

  [[nodiscard]] double param(std::string_view name) const {
    const auto names = family_param_names(family_);
    for (std::size_t k = 0; k < names.size(); ++k)
      if (names[k] == name) return params_[k];
    throw ConfigError("kernel family '" + std::string(family_name(family_)) + "' has no parameter '" +
                      std::string(name) + "'");
  }

  [[nodiscard]] KernelModel with_params(std::vector<double> params) const { return {family_, std::move(params)}; }

  [[nodiscard]] double operator()(double t) const;

 private:
  void validate() const {
    const auto expected = family_param_names(family_).size();
    if (params_.size() != expected) {
      throw ParameterDomainError(std::string(family_name(family_)) + " kernel expects " + std::to_string(expected) +
                                 " parameters, got " + std::to_string(params_.size()));
    }
    for (double p : params_) {
      if (!(p > 0.0) || !std::isfinite(p)) {
        throw ParameterDomainError(std::string(family_name(family_)) + " kernel parameters must be finite and positive");
      }
    }
    if (family_ == KernelFamily::MollifiedOU && !(params_[1] * params_[2] < 1.0)) {
      throw ParameterDomainError("mollified OU kernel requires beta * epsilon < 1");
    }
  }

  KernelFamily family_;
  std::vector<double> params_;
};

namespace detail {

// Matern correlation M(u) = 2^{1-nu} / Gamma(nu) * u^nu * K_nu(u), M(0) = 1.
inline double matern_correlation(double nu, double u) {
  if (u == 0.0) return 1.0;
  if (u < 1e-8 && nu > 1.0) return 1.0 - u * u / (4.0 * (nu - 1.0));
  const double log_prefactor = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(u);
  return std::exp(log_prefactor) * std::cyl_bessel_k(nu, u);
}

// 1 - M(u) by the ascending series of K_nu, free of cancellation for small u:
//   1 - M(u) = -sum_{k>=1} (u/2)^{2k} / (k! prod_{j<=k} (j - nu))
//              + D u^{2 nu} sum_{k>=0} (u/2)^{2k} / (k! prod_{j<=k} (nu + j)),
//   D = pi / (sin(nu pi) 4^nu Gamma(nu) Gamma(nu + 1)).
// Only used for u <= 1 and nu at least 0.05 away from an integer.
inline std::optional<double> matern_gap_series(double nu, double u) {
  if (!(u <= 1.0) || std::abs(nu - std::round(nu)) < 0.05) return std::nullopt;
  const double q = 0.25 * u * u;
  double analytic = 0.0, term = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= q / (k * (k - nu));
    analytic += term;
    if (std::abs(term) < 1e-18 * std::abs(analytic)) break;
  }
  double singular = 0.0;
  term = 1.0;
  for (int k = 0; k < 60; ++k) {
    if (k > 0) term *= q / (k * (nu + k));
    singular += term;
    if (std::abs(term) < 1e-18 * std::abs(singular)) break;
  }
  const double d = std::numbers::pi / std::sin(nu * std::numbers::pi) *
                   std::exp(-2.0 * nu * std::numbers::ln2 - std::lgamma(nu) - std::lgamma(nu + 1.0));
  return -analytic + d * std::pow(u, 2.0 * nu) * singular;
}

}  // namespace detail

/// K(|t|). Negative lags are folded onto |t|.
inline double kernel_eval(const KernelModel& kernel, double t) {
  t = std::abs(t);
  const double a = kernel.alpha();
  const double b = kernel.beta();
  switch (kernel.family()) {
    case KernelFamily::Gaussian:
      return a * std::exp(-0.5 * b * t * t);
    case KernelFamily::Matern: {
      const double nu = kernel.third();
      return a * detail::matern_correlation(nu, std::sqrt(2.0 * nu) * b * t);
    }
    case KernelFamily::RationalQuadratic: {
      const double g = kernel.third();
      return a * std::pow(1.0 + b * b * t * t / (2.0 * g), -g);
    }
    case KernelFamily::ExponentialOU:
      return a * std::exp(-b * t);
    case KernelFamily::MollifiedOU: {
      const double eps = kernel.third();
      const double be = b * eps;
      return a * (std::exp(-b * t) - be * std::exp(-t / eps)) / (1.0 - be * be);
    }
  }
  return 0.0;
}

inline double KernelModel::operator()(double t) const { return kernel_eval(*this, t); }

/// K(0) - K(h) evaluated without catastrophic cancellation where the family allows it.
inline double kernel_gap(const KernelModel& kernel, double h) {
  h = std::abs(h);
  const double a = kernel.alpha();
  const double b = kernel.beta();
  switch (kernel.family()) {
    case KernelFamily::Gaussian:
      return -a * std::expm1(-0.5 * b * h * h);
    case KernelFamily::RationalQuadratic: {
      const double g = kernel.third();
      return -a * std::expm1(-g * std::log1p(b * b * h * h / (2.0 * g)));
    }
    case KernelFamily::ExponentialOU:
      return -a * std::expm1(-b * h);
    case KernelFamily::MollifiedOU: {
      const double eps = kernel.third();
      const double be = b * eps;
      return a * (-std::expm1(-b * h) + be * std::expm1(-h / eps)) / (1.0 - be * be);
    }
    case KernelFamily::Matern: {
      const double nu = kernel.third();
      if (const auto g = detail::matern_gap_series(nu, std::sqrt(2.0 * nu) * b * h)) return a * *g;
      return kernel_eval(kernel, 0.0) - kernel_eval(kernel, h);
    }
  }
  return 0.0;
}

/// Second derivative of K at the origin (strictly negative for C^2 families).
inline double kernel_d2_at_zero(const KernelModel& kernel) {
  const double a = kernel.alpha();
  const double b = kernel.beta();
  switch (kernel.family()) {
    case KernelFamily::Gaussian:
      return -a * b;
    case KernelFamily::RationalQuadratic:
      return -a * b * b;
    case KernelFamily::Matern: {
      const double nu = kernel.third();
      if (!(nu > 1.0)) throw NotDifferentiableError("Matern kernel is twice differentiable at 0 only for nu > 1");
      return -a * b * b * nu / (nu - 1.0);
    }
    case KernelFamily::MollifiedOU: {
      const double eps = kernel.third();
      return -a * b / (eps * (1.0 + b * eps));
    }
    case KernelFamily::ExponentialOU:
      throw NotDifferentiableError(
          "exponential (OU) kernel is not differentiable at 0; use the mollified_ou family instead");
  }
  return 0.0;
}

/// Fourth derivative of K at the origin, for families that are C^4 there.
inline double kernel_d4_at_zero(const KernelModel& kernel) {
  const double a = kernel.alpha();
  const double b = kernel.beta();
  switch (kernel.family()) {
    case KernelFamily::Gaussian:
      return 3.0 * a * b * b;
    case KernelFamily::RationalQuadratic: {
      const double g = kernel.third();
      return 3.0 * a * std::pow(b, 4) * (1.0 + g) / g;
    }
    case KernelFamily::Matern: {
      const double nu = kernel.third();
      if (!(nu > 2.0)) throw CapabilityError("Matern kernel has a fourth derivative at 0 only for nu > 2");
      return 3.0 * a * std::pow(b, 4) * nu * nu / ((nu - 1.0) * (nu - 2.0));
    }
    case KernelFamily::MollifiedOU:
      throw CapabilityError("Laplace-mollified OU kernel is not C^4 at 0 (third derivative jumps)");
    case KernelFamily::ExponentialOU:
      throw CapabilityError("exponential (OU) kernel has no derivatives at 0");
  }
  return 0.0;
}

/// Variance of a lag-h increment, 2 (K(0) - K(h)).
///
/// h = 0 returns 0. For h > 0 a variance at or below 1e-300 raises
/// DegenerateVarianceError since the value is used as a denominator.
inline double local_variance(const KernelModel& kernel, double h) {
  if (h < 0.0 || !std::isfinite(h)) throw ParameterDomainError("local_variance requires a finite lag h >= 0");
  if (h == 0.0) return 0.0;
  const double v = 2.0 * kernel_gap(kernel, h);
  if (!(v > 1e-300)) {
    throw DegenerateVarianceError("increment variance 2(K(0)-K(h)) is not positive at h=" + std::to_string(h));
  }
  return v;
}

/// Covariance matrix M(i, j) = K(|t_i - t_j|).
inline Eigen::MatrixXd gram_matrix(const KernelModel& kernel, std::span<const double> grid) {
  const auto m = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd gram(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    gram(i, i) = kernel_eval(kernel, 0.0);
    for (Eigen::Index j = 0; j < i; ++j) gram(i, j) = gram(j, i) = kernel_eval(kernel, grid[i] - grid[j]);
  }
  return gram;
}

}  // namespace hfgp
