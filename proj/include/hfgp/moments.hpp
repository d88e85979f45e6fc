#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "hfgp/drift.hpp"
#include "hfgp/error.hpp"
#include "hfgp/kernels.hpp"
#include "hfgp/numerics.hpp"
#include "hfgp/residuals.hpp"
#include "hfgp/simulate.hpp"

// Index convention: every sum over i = 1..n pairs the increment Delta_i with
// the left point Y_{i-1}. Level statistics therefore use y[0..n-1].

namespace hfgp {

/// Y_i = X_{t_i} - int_0^{t_i} mu_{xi_hat}(s) ds, i = 0..n.
struct DetrendedSeries {
  std::vector<double> y;
  double h = 0.0;
  std::vector<double> xi_hat_used;

  [[nodiscard]] std::size_t n() const { return y.empty() ? 0 : y.size() - 1; }
};

inline DetrendedSeries detrend(const PathSample& path, const DriftModel& drift_family, std::span<const double> xi_hat) {
  require_path(path);
  if (xi_hat.size() != drift_family.dim()) throw ConfigError("xi_hat has the wrong dimension for the drift family");
  const DriftModel fitted = drift_family.with_xi({xi_hat.begin(), xi_hat.end()});
  DetrendedSeries s{path.values, path.h, {xi_hat.begin(), xi_hat.end()}};
  for (std::size_t i = 0; i < s.y.size(); ++i) s.y[i] -= drift_integral(fitted, path.times[i]);
  return s;
}

/// (1/n) sum_{i=1}^n Y_{i-1}^2, the moment estimator of K(0).
inline double moment_alpha(const DetrendedSeries& s) {
  if (s.n() < 1) throw ConfigError("moment_alpha needs n >= 1");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.n(); ++i) acc += s.y[i] * s.y[i];
  return acc / static_cast<double>(s.n());
}

/// sum (Delta_i Y)^2 / (h^2 sum Y_{i-1}^2).
inline double moment_beta(const DetrendedSeries& s) {
  if (s.n() < 1) throw ConfigError("moment_beta needs n >= 1");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 1; i <= s.n(); ++i) {
    const double d = s.y[i] - s.y[i - 1];
    num += d * d;
    den += s.y[i - 1] * s.y[i - 1];
  }
  if (!(den > 0.0)) throw DegenerateVarianceError("moment_beta: sum of squared levels is zero");
  return num / (s.h * s.h * den);
}

// ---------------------------------------------------------------------------
// Normalized increment moments

/// (1/(n h^{2 kappa})) sum (Delta_i x)^{2 kappa}.
inline double empirical_increment_moment(std::span<const double> x, double h, int kappa) {
  if (kappa < 1 || kappa > 3) throw ConfigError("kappa must be 1, 2 or 3");
  if (x.size() < 2) throw ConfigError("need at least two observations");
  const auto d = increments(x);
  return sum_of_powers(d, 2 * kappa) / (static_cast<double>(d.size()) * std::pow(h, 2 * kappa));
}

inline double empirical_increment_moment(const PathSample& path, int kappa) {
  return empirical_increment_moment(path.values, path.h, kappa);
}

inline double empirical_increment_moment(const DetrendedSeries& s, int kappa) {
  return empirical_increment_moment(s.y, s.h, kappa);
}

/// ((2 kappa)! / (2^kappa kappa!)) (-K''(0))^kappa
inline double increment_moment_limit(const KernelModel& kernel, int kappa) {
  double double_factorial = 1.0;  // (2 kappa - 1)!!
  for (int k = 2 * kappa - 1; k > 1; k -= 2) double_factorial *= k;
  return double_factorial * std::pow(-kernel_d2_at_zero(kernel), kappa);
}

// ---------------------------------------------------------------------------
// Pair functionals (1/(n h^2)) sum G(Y_{i-1}, Y_i)

/// G(x, y) with G(x, x) = 0. The optional diagonal derivatives dG/dy(z, z)
/// and d2G/dy2(z, z) are used for the limit; when absent they are taken by
/// central differences.
struct PairFunctional {
  std::string name;
  std::function<double(double, double)> G;
  std::function<double(double)> dy_diag;
  std::function<double(double)> dyy_diag;

  static PairFunctional squared_increment() {
    return {"(y-x)^2", [](double x, double y) { return (y - x) * (y - x); }, [](double) { return 0.0; },
            [](double) { return 2.0; }};
  }
  static PairFunctional increment_times_level_squared() {
    return {"(y-x)y^2", [](double x, double y) { return (y - x) * y * y; }, [](double z) { return z * z; },
            [](double z) { return 4.0 * z; }};
  }
  static PairFunctional by_name(const std::string& name) {
    if (name == "(y-x)^2" || name == "sq_increment") return squared_increment();
    if (name == "(y-x)y^2" || name == "increment_level_sq") return increment_times_level_squared();
    throw ConfigError("unknown pair functional '" + name + "'");
  }
};

inline double g_functional(const DetrendedSeries& s, const PairFunctional& g) {
  if (s.n() < 1) throw ConfigError("g_functional needs n >= 1");
  double acc = 0.0;
  for (std::size_t i = 1; i <= s.n(); ++i) acc += g.G(s.y[i - 1], s.y[i]);
  return acc / (static_cast<double>(s.n()) * s.h * s.h);
}

/// Ergodic limit of g_functional:
///   (K''(0) / (2 K(0))) E[ dG/dy(Z,Z) Z - d2G/dy2(Z,Z) K(0) ],  Z ~ N(0, K(0)).
inline double g_functional_limit(const PairFunctional& g, const KernelModel& kernel) {
  const double k0 = kernel_eval(kernel, 0.0);
  const double k2 = kernel_d2_at_zero(kernel);
  auto dy = g.dy_diag;
  auto dyy = g.dyy_diag;
  if (!dy || !dyy) {
    const double step = 1e-4 * std::sqrt(k0);
    const auto G = g.G;
    dy = [G, step](double z) { return (G(z, z + step) - G(z, z - step)) / (2.0 * step); };
    dyy = [G, step](double z) { return (G(z, z + step) - 2.0 * G(z, z) + G(z, z - step)) / (step * step); };
  }
  const double expectation = numerics::gaussian_expectation([&](double z) { return dy(z) * z - dyy(z) * k0; }, k0);
  return k2 / (2.0 * k0) * expectation;
}

// ---------------------------------------------------------------------------
// Fourth derivative of the kernel at the origin

/// Which closed form is used to turn (delta_hat, m4_hat) into an estimate of K''''(0).
enum class K4Formula {
  // (2 / (delta h^2)) (3 delta^2 - m4): the inversion of
  // E[(Delta Z)^4] = 3 delta^2 h^4 - (1/2) delta K4 h^6 + o(h^6).
  Inversion,
  // (1 / h^2) (3 delta - m4 / delta), literal variant.
  PrintedRemark,
  // (1 / h^2) (3 delta^2 - m4 / delta), literal RQ variant.
  PrintedRationalQuadratic,
};

inline double k4_from_moments(double delta, double m4, double h, K4Formula formula = K4Formula::Inversion) {
  if (!(delta > 0.0)) throw DegenerateVarianceError("K4 estimate needs delta > 0");
  switch (formula) {
    case K4Formula::Inversion: return 2.0 / (delta * h * h) * (3.0 * delta * delta - m4);
    case K4Formula::PrintedRemark: return (3.0 * delta - m4 / delta) / (h * h);
    case K4Formula::PrintedRationalQuadratic: return (3.0 * delta * delta - m4 / delta) / (h * h);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

struct K4Estimate {
  double k4 = 0.0;
  double delta = 0.0;  // (1/(n h^2)) sum r^2
  double m4 = 0.0;     // (1/(n h^4)) sum r^4
};

/// Estimate of d^4 K / dt^4 at 0 from the residuals Delta_i X - mu_{xi_hat}(t_{i-1}) h.
inline K4Estimate estimate_k4(const PathSample& path, const DriftModel& drift_family, std::span<const double> xi_hat,
                              K4Formula formula = K4Formula::Inversion) {
  const auto r = drift_residuals(path, drift_family.with_xi({xi_hat.begin(), xi_hat.end()}));
  const double n = static_cast<double>(r.size());
  const double h = path.h;
  K4Estimate e;
  e.delta = sum_of_powers(r, 2) / (n * h * h);
  e.m4 = sum_of_powers(r, 4) / (n * std::pow(h, 4));
  e.k4 = k4_from_moments(e.delta, e.m4, h, formula);
  return e;
}

// ---------------------------------------------------------------------------
// Z-estimation

/// f applied to the levels Y_{i-1}; the target is E f(N(0, K_sigma(0))).
struct LevelMoment {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> gaussian_mean;  // variance -> E f(N(0, variance)); optional

  static LevelMoment power(int k) {
    if (k < 1) throw ConfigError("moment power must be >= 1");
    return {"x^" + std::to_string(k), [k](double x) { return std::pow(x, k); },
            [k](double v) {
              if (k % 2 == 1) return 0.0;
              double df = 1.0;
              for (int j = k - 1; j > 1; j -= 2) df *= j;
              return df * std::pow(v, k / 2);
            }};
  }
  static LevelMoment by_name(const std::string& name) {
    if (name.size() > 2 && name.rfind("x^", 0) == 0) return power(std::stoi(name.substr(2)));
    if (name == "x2") return power(2);
    if (name == "x4") return power(4);
    throw ConfigError("unknown moment function '" + name + "'");
  }
};

/// G applied to pairs (Y_{i-1}, Y_i) scaled by 1/h^2; the target is g_functional_limit.
struct PairMoment {
  PairFunctional g;
};

using MomentCondition = std::variant<LevelMoment, PairMoment>;

inline double empirical_moment(const DetrendedSeries& s, const MomentCondition& c) {
  if (const auto* level = std::get_if<LevelMoment>(&c)) {
    double acc = 0.0;
    for (std::size_t i = 0; i < s.n(); ++i) acc += level->f(s.y[i]);
    return acc / static_cast<double>(s.n());
  }
  return g_functional(s, std::get<PairMoment>(c).g);
}

inline double model_moment(const KernelModel& kernel, const MomentCondition& c) {
  if (const auto* level = std::get_if<LevelMoment>(&c)) {
    const double k0 = kernel_eval(kernel, 0.0);
    if (level->gaussian_mean) return level->gaussian_mean(k0);
    return numerics::gaussian_expectation(level->f, k0);
  }
  return g_functional_limit(std::get<PairMoment>(c).g, kernel);
}

namespace detail {
inline std::string format_vector(const Eigen::VectorXd& v) {
  std::string s = "(";
  for (Eigen::Index k = 0; k < v.size(); ++k) s += (k ? ", " : "") + std::to_string(v(k));
  return s + ")";
}
}  // namespace detail

struct ZEstimate {
  KernelModel kernel;  // family parameters with the free components at the root
  std::size_t iterations = 0;
  double residual_norm = 0.0;
};

/// Root of Phi_n(sigma) = empirical moments - model moments over the free
/// kernel parameters `free` (indices into the family's parameter vector).
/// q = 1: bracketing in log-space followed by TOMS 748.
/// q > 1: damped Newton with a forward-difference Jacobian.
inline ZEstimate z_estimator(const DetrendedSeries& s, std::span<const MomentCondition> conditions,
                             const KernelModel& init, std::span<const std::size_t> free) {
  const std::size_t q = free.size();
  if (q == 0 || conditions.size() != q) throw ConfigError("z_estimator needs as many moment conditions as free parameters");
  std::vector<double> empirical(q);
  for (std::size_t k = 0; k < q; ++k) empirical[k] = empirical_moment(s, conditions[k]);

  auto kernel_at = [&](const Eigen::VectorXd& sigma) {
    std::vector<double> p(init.params().begin(), init.params().end());
    for (std::size_t k = 0; k < q; ++k) p[free[k]] = sigma(static_cast<Eigen::Index>(k));
    return init.with_params(std::move(p));
  };
  auto phi = [&](const Eigen::VectorXd& sigma) {
    const KernelModel kernel = kernel_at(sigma);
    Eigen::VectorXd out(static_cast<Eigen::Index>(q));
    for (std::size_t k = 0; k < q; ++k) out(static_cast<Eigen::Index>(k)) = empirical[k] - model_moment(kernel, conditions[k]);
    return out;
  };

  Eigen::VectorXd sigma(static_cast<Eigen::Index>(q));
  for (std::size_t k = 0; k < q; ++k) sigma(static_cast<Eigen::Index>(k)) = init.params()[free[k]];
  Eigen::VectorXd value = phi(sigma);
  if (value.norm() == 0.0) return {init, 0, 0.0};

  if (q == 1) {
    auto scalar = [&](double log_sigma) {
      Eigen::VectorXd x(1);
      x(0) = std::exp(log_sigma);
      return phi(x)(0);
    };
    double lo = std::log(sigma(0)), hi = lo;
    double f_lo = value(0), f_hi = value(0);
    std::size_t expansions = 0;
    for (; expansions < 60 && f_lo * f_hi > 0.0; ++expansions) {
      lo -= 0.5;
      hi += 0.5;
      f_lo = scalar(lo);
      f_hi = scalar(hi);
    }
    if (f_lo * f_hi > 0.0) {
      throw RootNotFoundError("z_estimator: no sign change of Phi_n in sigma in [" + std::to_string(std::exp(lo)) + ", " +
                              std::to_string(std::exp(hi)) + "]; Phi values " + std::to_string(f_lo) + ", " +
                              std::to_string(f_hi));
    }
    std::uintmax_t max_iter = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        scalar, lo, hi, f_lo, f_hi, boost::math::tools::eps_tolerance<double>(52), max_iter);
    Eigen::VectorXd root(1);
    root(0) = std::exp(0.5 * (a + b));
    return {kernel_at(root), expansions + static_cast<std::size_t>(max_iter), std::abs(phi(root)(0))};
  }

  const double scale = std::max(1.0, Eigen::Map<const Eigen::VectorXd>(empirical.data(), static_cast<Eigen::Index>(q)).norm());
  std::size_t it = 0;
  for (; it < 200; ++it) {
    if (value.norm() < 1e-12 * scale) break;
    Eigen::MatrixXd jac(q, q);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(q); ++k) {
      Eigen::VectorXd bumped = sigma;
      const double step = 1e-6 * std::max(std::abs(sigma(k)), 1e-3);
      bumped(k) += step;
      jac.col(k) = (phi(bumped) - value) / step;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (lu.rank() < static_cast<Eigen::Index>(q)) {
      throw RootNotFoundError("z_estimator: singular Jacobian at sigma = " + detail::format_vector(sigma) +
                              " (the moment conditions do not identify the free parameters)");
    }
    const Eigen::VectorXd delta = lu.solve(-value);
    double damping = 1.0;
    bool accepted = false;
    for (int halvings = 0; halvings < 40; ++halvings, damping *= 0.5) {
      const Eigen::VectorXd trial = sigma + damping * delta;
      if ((trial.array() <= 0.0).any()) continue;
      Eigen::VectorXd trial_value;
      try {
        trial_value = phi(trial);
      } catch (const ParameterDomainError&) {
        continue;
      }
      if (trial_value.norm() < value.norm()) {
        sigma = trial;
        value = trial_value;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  if (!(value.norm() < 1e-8 * scale)) {
    throw RootNotFoundError("z_estimator: damped Newton stalled with |Phi_n| = " + std::to_string(value.norm()));
  }
  return {kernel_at(sigma), it, value.norm()};
}

// ---------------------------------------------------------------------------
// Long-run variance

/// Bartlett-weighted (Newey-West) long-run covariance of the rows of
/// `contributions` (n x q). This is a plug-in approximation of
/// lim n Var(mean), not an exact asymptotic variance.
inline Eigen::MatrixXd newey_west(const Eigen::MatrixXd& contributions, std::size_t bandwidth) {
  const Eigen::Index n = contributions.rows();
  const Eigen::MatrixXd centered = contributions.rowwise() - contributions.colwise().mean();
  Eigen::MatrixXd lrv = centered.transpose() * centered / static_cast<double>(n);
  for (std::size_t lag = 1; lag <= bandwidth && static_cast<Eigen::Index>(lag) < n; ++lag) {
    const auto L = static_cast<Eigen::Index>(lag);
    const Eigen::MatrixXd gamma =
        centered.bottomRows(n - L).transpose() * centered.topRows(n - L) / static_cast<double>(n);
    const double w = 1.0 - static_cast<double>(lag) / static_cast<double>(bandwidth + 1);
    lrv += w * (gamma + gamma.transpose());
  }
  return lrv;
}

inline std::size_t default_bandwidth(std::size_t n) {
  return static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
}

/// Per-observation contributions of the moment conditions (rows i = 1..n).
inline Eigen::MatrixXd moment_contributions(const DetrendedSeries& s, std::span<const MomentCondition> conditions) {
  Eigen::MatrixXd c(static_cast<Eigen::Index>(s.n()), static_cast<Eigen::Index>(conditions.size()));
  for (std::size_t k = 0; k < conditions.size(); ++k) {
    for (std::size_t i = 1; i <= s.n(); ++i) {
      double v;
      if (const auto* level = std::get_if<LevelMoment>(&conditions[k])) {
        v = level->f(s.y[i - 1]);
      } else {
        v = std::get<PairMoment>(conditions[k]).g.G(s.y[i - 1], s.y[i]) / (s.h * s.h);
      }
      c(static_cast<Eigen::Index>(i - 1), static_cast<Eigen::Index>(k)) = v;
    }
  }
  return c;
}

/// Sandwich standard errors sqrt(diag(A^{-1} Gamma2 A^{-T}) / n) with the
/// Newey-West Gamma2 and a finite-difference A = d Phi / d sigma.
inline std::vector<double> z_estimator_std_errors(const DetrendedSeries& s, std::span<const MomentCondition> conditions,
                                                  const KernelModel& fitted, std::span<const std::size_t> free,
                                                  std::size_t bandwidth) {
  const auto q = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd A(q, q);
  for (Eigen::Index k = 0; k < q; ++k) {
    std::vector<double> up(fitted.params().begin(), fitted.params().end());
    std::vector<double> dn = up;
    const double step = 1e-5 * up[free[k]];
    up[free[k]] += step;
    dn[free[k]] -= step;
    const KernelModel ku = fitted.with_params(up), kd = fitted.with_params(dn);
    for (Eigen::Index j = 0; j < q; ++j) {
      // Phi = empirical - model, so dPhi/dsigma = -d model/dsigma
      A(j, k) = -(model_moment(ku, conditions[j]) - model_moment(kd, conditions[j])) / (2.0 * step);
    }
  }
  const Eigen::MatrixXd gamma2 = newey_west(moment_contributions(s, conditions), bandwidth);
  const Eigen::MatrixXd Ainv = A.inverse();
  const Eigen::MatrixXd cov = Ainv * gamma2 * Ainv.transpose() / static_cast<double>(s.n());
  std::vector<double> se(free.size());
  for (Eigen::Index k = 0; k < q; ++k) se[k] = std::sqrt(std::max(cov(k, k), 0.0));
  return se;
}

}  // namespace hfgp
