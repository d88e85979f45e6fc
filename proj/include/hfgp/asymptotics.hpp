#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hfgp/contrast.hpp"
#include "hfgp/drift.hpp"
#include "hfgp/error.hpp"
#include "hfgp/kernels.hpp"
#include "hfgp/numerics.hpp"

namespace hfgp {

/// Gradient and Hessian of g(sigma) = log(-K''_sigma(0)) over the full parameter vector.
struct LogCurvatureDerivatives {
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

inline LogCurvatureDerivatives log_curvature_derivatives(const KernelModel& kernel) {
  const double a = kernel.alpha();
  const double b = kernel.beta();
  LogCurvatureDerivatives d;
  switch (kernel.family()) {
    case KernelFamily::Gaussian:
      d.gradient = Eigen::Vector2d(1.0 / a, 1.0 / b);
      d.hessian = Eigen::Vector2d(-1.0 / (a * a), -1.0 / (b * b)).asDiagonal();
      return d;
    case KernelFamily::RationalQuadratic:
      d.gradient = Eigen::Vector3d(1.0 / a, 2.0 / b, 0.0);
      d.hessian = Eigen::Vector3d(-1.0 / (a * a), -2.0 / (b * b), 0.0).asDiagonal();
      return d;
    case KernelFamily::Matern: {
      const double nu = kernel.third();
      if (!(nu > 1.0)) throw NotDifferentiableError("Matern kernel needs nu > 1 for a curvature at 0");
      d.gradient = Eigen::Vector3d(1.0 / a, 2.0 / b, 1.0 / nu - 1.0 / (nu - 1.0));
      d.hessian = Eigen::Vector3d(-1.0 / (a * a), -2.0 / (b * b), -1.0 / (nu * nu) + 1.0 / ((nu - 1.0) * (nu - 1.0)))
                      .asDiagonal();
      return d;
    }
    case KernelFamily::MollifiedOU: {
      const double e = kernel.third();
      const double s = 1.0 + b * e;
      d.gradient = Eigen::Vector3d(1.0 / a, 1.0 / b - e / s, -1.0 / e - b / s);
      d.hessian = Eigen::Matrix3d::Zero();
      d.hessian(0, 0) = -1.0 / (a * a);
      d.hessian(1, 1) = -1.0 / (b * b) + e * e / (s * s);
      d.hessian(2, 2) = 1.0 / (e * e) + b * b / (s * s);
      d.hessian(1, 2) = d.hessian(2, 1) = -1.0 / (s * s);
      return d;
    }
    case KernelFamily::ExponentialOU:
      throw NotDifferentiableError("exponential (OU) kernel has no curvature at 0");
  }
  return d;
}

/// Central finite differences of log(curvature(sigma)) for any curvature map sigma -> -K''(0).
inline LogCurvatureDerivatives log_curvature_derivatives_fd(const std::function<double(std::span<const double>)>& curvature,
                                                            std::span<const double> sigma) {
  const auto q = static_cast<Eigen::Index>(sigma.size());
  auto g = [&](const std::vector<double>& s) {
    const double c = curvature(s);
    if (!(c > 0.0)) throw DegenerateVarianceError("curvature -K''(0) must be positive");
    return std::log(c);
  };
  const std::vector<double> base(sigma.begin(), sigma.end());
  std::vector<double> step(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) step[k] = 1e-4 * std::max(std::abs(base[k]), 1e-3);
  LogCurvatureDerivatives d{Eigen::VectorXd(q), Eigen::MatrixXd(q, q)};
  const double g0 = g(base);
  for (Eigen::Index k = 0; k < q; ++k) {
    auto up = base, dn = base;
    up[k] += step[k];
    dn[k] -= step[k];
    const double gu = g(up), gd = g(dn);
    d.gradient(k) = (gu - gd) / (2.0 * step[k]);
    d.hessian(k, k) = (gu - 2.0 * g0 + gd) / (step[k] * step[k]);
    for (Eigen::Index j = 0; j < k; ++j) {
      auto pp = base, pm = base, mp = base, mm = base;
      pp[k] += step[k], pp[j] += step[j];
      pm[k] += step[k], pm[j] -= step[j];
      mp[k] -= step[k], mp[j] += step[j];
      mm[k] -= step[k], mm[j] -= step[j];
      d.hessian(k, j) = d.hessian(j, k) = (g(pp) - g(pm) - g(mp) + g(mm)) / (4.0 * step[k] * step[j]);
    }
  }
  return d;
}

struct AsymptoticInfo {
  Eigen::MatrixXd drift_block;                 // p x p
  std::optional<Eigen::MatrixXd> sigma_block;  // q x q, absent when V2 is singular
  Eigen::MatrixXd V1, V2;
  std::vector<std::string> sigma_names;
  bool v2_singular = false;
  double drift_quadrature_error = 0.0;
  std::string drift_rate = kDriftRate;
  std::string sigma_rate = kKernelRate;

  [[nodiscard]] const Eigen::MatrixXd& require_sigma_block() const {
    if (!sigma_block) throw IdentifiabilityError("V2 is singular: the kernel information matrix is not invertible");
    return *sigma_block;
  }
};

/// int_0^inf w_j w_k dt; closed form for profiles that provide it.
inline Eigen::MatrixXd drift_square_integral(const DriftModel& drift, double* error_out = nullptr) {
  const auto p = static_cast<Eigen::Index>(drift.dim());
  Eigen::MatrixXd m(p, p);
  double err = 0.0;
  const double inf = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k <= j; ++k) {
      const auto& wj = drift.basis()[j];
      const auto& wk = drift.basis()[k];
      double v;
      if (j == k && std::isfinite(wj.square_integral_closed_form())) {
        v = wj.square_integral_closed_form();
      } else {
        const auto r = numerics::integrate([&](double t) { return wj(t) * wk(t); }, 0.0, inf, 1e-10, 1e-14);
        v = r.value;
        err = std::max(err, r.error_estimate);
      }
      m(j, k) = m(k, j) = v;
    }
  }
  if (error_out) *error_out = err;
  return m;
}

namespace detail {

inline AsymptoticInfo assemble_info(const DriftModel& drift, double curvature, const LogCurvatureDerivatives& d,
                                    std::span<const std::size_t> sigma_index, std::vector<std::string> names) {
  AsymptoticInfo info;
  if (drift.dim() > 0) {
    const Eigen::MatrixXd S = drift_square_integral(drift, &info.drift_quadrature_error);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(2.0 * S);
    if (!lu.isInvertible()) throw IdentifiabilityError("drift information matrix is singular");
    info.drift_block = curvature * lu.inverse();
  } else {
    info.drift_block.resize(0, 0);
  }
  const auto q = static_cast<Eigen::Index>(sigma_index.size());
  Eigen::VectorXd grad(q);
  info.V2.resize(q, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    grad(k) = d.gradient(static_cast<Eigen::Index>(sigma_index[k]));
    for (Eigen::Index j = 0; j < q; ++j)
      info.V2(k, j) = d.hessian(static_cast<Eigen::Index>(sigma_index[k]), static_cast<Eigen::Index>(sigma_index[j]));
  }
  info.V1 = 0.25 * grad * grad.transpose();
  info.sigma_names = std::move(names);
  if (q > 0) {
    // Singular when the smallest singular value is below 1e-6 of the natural scale
    // max(|V2|, |grad|^2); finite-difference Hessians carry noise well above roundoff.
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(info.V2);
    const auto& sv = svd.singularValues();
    const double scale = std::max(sv(0), grad.squaredNorm());
    if (!(sv(q - 1) > 1e-6 * scale)) {
      info.v2_singular = true;
    } else {
      const Eigen::MatrixXd inv = info.V2.inverse();
      info.sigma_block = inv * info.V1 * inv;
    }
  }
  return info;
}

}  // namespace detail

/// Sigma(theta) blocks for a built-in kernel family. `sigma_index` selects the
/// estimated kernel parameters (all of them when empty).
inline AsymptoticInfo fisher_blocks(const KernelModel& kernel, const DriftModel& drift,
                                    std::vector<std::size_t> sigma_index = {}) {
  const auto names = family_param_names(kernel.family());
  if (sigma_index.empty())
    for (std::size_t k = 0; k < names.size(); ++k) sigma_index.push_back(k);
  std::vector<std::string> selected;
  for (auto k : sigma_index) {
    if (k >= names.size()) throw ConfigError("sigma index out of range");
    selected.emplace_back(names[k]);
  }
  return detail::assemble_info(drift, -kernel_d2_at_zero(kernel), log_curvature_derivatives(kernel), sigma_index,
                               std::move(selected));
}

/// Same for a user family given only through sigma -> -K''_sigma(0); derivatives by finite differences.
inline AsymptoticInfo fisher_blocks(const std::function<double(std::span<const double>)>& curvature,
                                    std::span<const double> sigma, std::vector<std::string> names,
                                    const DriftModel& drift) {
  if (names.size() != sigma.size()) throw ConfigError("one name per kernel parameter is required");
  std::vector<std::size_t> index(sigma.size());
  for (std::size_t k = 0; k < index.size(); ++k) index[k] = k;
  return detail::assemble_info(drift, curvature(sigma), log_curvature_derivatives_fd(curvature, sigma), index,
                               std::move(names));
}

/// se(xi_j) = sqrt(drift_block_jj) h^{1/2}; se(sigma_k) = sqrt(sigma_block_kk) / sqrt(n).
inline EstimateReport standard_errors(EstimateReport report, const AsymptoticInfo& info, const SamplingScheme& scheme) {
  const double sqrt_h = std::sqrt(scheme.h);
  const double sqrt_n = std::sqrt(static_cast<double>(scheme.n));
  Eigen::Index drift_pos = 0;
  for (auto& e : report.estimates) {
    if (e.rate == kDriftRate) {
      if (drift_pos < info.drift_block.rows()) {
        e.std_error = std::sqrt(std::max(info.drift_block(drift_pos, drift_pos), 0.0)) * sqrt_h;
      }
      ++drift_pos;
      continue;
    }
    if (!info.sigma_block) continue;
    for (std::size_t k = 0; k < info.sigma_names.size(); ++k) {
      if (info.sigma_names[k] != e.name) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      e.std_error = std::sqrt(std::max((*info.sigma_block)(kk, kk), 0.0)) / sqrt_n;
    }
  }
  if (info.v2_singular) report.notes.push_back("kernel information V2 singular; sigma standard errors omitted");
  return report;
}

}  // namespace hfgp
