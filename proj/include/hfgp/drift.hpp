#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hfgp/error.hpp"
#include "hfgp/numerics.hpp"

namespace hfgp {

/// A known drift profile w(t) on [0, inf).
///
/// Closed forms are used when the profile provides them; otherwise the
/// integrals fall back to adaptive quadrature.
class Profile {
 public:
  using Fn = std::function<double(double)>;

  // w(t) = exp(-rate t)
  static Profile exp_decay(double rate = 1.0) {
    if (!(rate > 0.0)) throw ParameterDomainError("exp_decay rate must be positive");
    Profile p;
    p.name_ = "exp_decay";
    p.eval_ = [rate](double t) { return std::exp(-rate * t); };
    p.integral_ = [rate](double t) { return -std::expm1(-rate * t) / rate; };
    p.abs_tail_ = [rate](double T) { return std::exp(-rate * T) / rate; };
    p.square_integral_ = 1.0 / (2.0 * rate);
    return p;
  }

  // Piecewise-linear interpolation of (t_k, w_k), t_0 = 0, continued past the
  // last knot by w_last * exp(-tail_rate (t - t_last)). The tail rate is a
  // declaration by the caller: integrability cannot be verified from a table.
  static Profile tabulated(std::vector<double> t, std::vector<double> w, double tail_rate) {
    if (t.size() != w.size() || t.size() < 2) throw ConfigError("tabulated profile needs >= 2 (t, w) pairs");
    if (t.front() != 0.0) throw ConfigError("tabulated profile must start at t = 0");
    for (std::size_t k = 1; k < t.size(); ++k)
      if (!(t[k] > t[k - 1])) throw ConfigError("tabulated profile times must be strictly increasing");
    if (!(tail_rate > 0.0) && w.back() != 0.0)
      throw ConfigError("tabulated profile needs a positive tail_rate unless it ends at w = 0");
    auto table = std::make_shared<const Table>(Table{std::move(t), std::move(w), tail_rate});
    Profile p;
    p.name_ = "table";
    p.eval_ = [table](double s) { return table->eval(s); };
    p.integral_ = [table](double s) { return table->integral(s); };
    p.abs_tail_ = [table](double T) { return table->abs_tail(T); };
    return p;
  }

  static Profile callable(Fn w, std::string name = "callable") {
    Profile p;
    p.name_ = std::move(name);
    p.eval_ = std::move(w);
    return p;
  }

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] double operator()(double t) const { return eval_(t); }

  // int_0^t w(s) ds; t may be +infinity.
  [[nodiscard]] double integral(double t) const {
    if (integral_) return integral_(t);
    return numerics::integrate(eval_, 0.0, t).value;
  }

  // int_T^inf |w(s)| ds
  [[nodiscard]] double abs_tail(double T) const {
    if (abs_tail_) return abs_tail_(T);
    const Fn& w = eval_;
    return numerics::integrate([&w](double s) { return std::abs(w(s)); }, T,
                               std::numeric_limits<double>::infinity())
        .value;
  }

  // int_0^inf w(s)^2 ds when known in closed form, NaN otherwise.
  [[nodiscard]] double square_integral_closed_form() const { return square_integral_; }

 private:
  struct Table {
    std::vector<double> t, w;
    double tail_rate;

    [[nodiscard]] double eval(double s) const {
      if (s >= t.back()) return tail_rate > 0.0 ? w.back() * std::exp(-tail_rate * (s - t.back())) : 0.0;
      const auto k = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), s) - t.begin());
      const double u = (s - t[k - 1]) / (t[k] - t[k - 1]);
      return w[k - 1] + u * (w[k] - w[k - 1]);
    }
    [[nodiscard]] double tail_integral(double from, double to) const {  // beyond t.back()
      if (!(tail_rate > 0.0)) return 0.0;
      return w.back() * (std::exp(-tail_rate * (from - t.back())) - std::exp(-tail_rate * (to - t.back()))) /
             tail_rate;
    }
    [[nodiscard]] double integral(double s) const {
      double acc = 0.0;
      for (std::size_t k = 1; k < t.size() && t[k - 1] < s; ++k) {
        const double b = std::min(s, t[k]);
        acc += 0.5 * (w[k - 1] + eval(b)) * (b - t[k - 1]);
      }
      if (s > t.back()) acc += tail_integral(t.back(), s);
      return acc;
    }
    // Exact integral of |linear| over [a, b].
    static double abs_linear(double a, double wa, double b, double wb) {
      if (wa * wb >= 0.0) return 0.5 * (std::abs(wa) + std::abs(wb)) * (b - a);
      const double root = a + (b - a) * wa / (wa - wb);
      return 0.5 * std::abs(wa) * (root - a) + 0.5 * std::abs(wb) * (b - root);
    }
    [[nodiscard]] double abs_tail(double T) const {
      double acc = 0.0;
      for (std::size_t k = 1; k < t.size(); ++k) {
        if (t[k] <= T) continue;
        const double a = std::max(T, t[k - 1]);
        acc += abs_linear(a, eval(a), t[k], w[k]);
      }
      if (tail_rate > 0.0) acc += std::abs(w.back()) * std::exp(-tail_rate * (std::max(T, t.back()) - t.back())) / tail_rate;
      return acc;
    }
  };

  std::string name_;
  Fn eval_;
  Fn integral_;
  Fn abs_tail_;
  double square_integral_ = std::numeric_limits<double>::quiet_NaN();
};

/// Drift family mu_xi(t) = sum_j xi_j w_j(t), linear in xi.
///
/// ExpDecay is the single profile w(t) = exp(-t); Zero has no parameters.
class DriftModel {
 public:
  enum class Kind { ExpDecay, Scaled, Zero };

  static DriftModel exp_decay(double xi) { return {Kind::ExpDecay, {Profile::exp_decay()}, {xi}}; }
  static DriftModel scaled(Profile w, double xi) { return {Kind::Scaled, {std::move(w)}, {xi}}; }
  static DriftModel linear(std::vector<Profile> basis, std::vector<double> xi) {
    return {Kind::Scaled, std::move(basis), std::move(xi)};
  }
  static DriftModel zero() { return {Kind::Zero, {}, {}}; }

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::size_t dim() const { return xi_.size(); }
  [[nodiscard]] std::span<const double> xi() const { return xi_; }
  [[nodiscard]] std::span<const Profile> basis() const { return basis_; }

  [[nodiscard]] DriftModel with_xi(std::vector<double> xi) const { return {kind_, basis_, std::move(xi)}; }

 private:
  DriftModel(Kind kind, std::vector<Profile> basis, std::vector<double> xi)
      : kind_(kind), basis_(std::move(basis)), xi_(std::move(xi)) {
    if (basis_.size() != xi_.size()) throw ConfigError("drift basis and xi have different lengths");
    for (double x : xi_)
      if (!std::isfinite(x)) throw ParameterDomainError("drift parameters must be finite");
  }

  Kind kind_;
  std::vector<Profile> basis_;
  std::vector<double> xi_;
};

inline double drift_eval(const DriftModel& drift, double t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < drift.dim(); ++j) acc += drift.xi()[j] * drift.basis()[j](t);
  return acc;
}

/// int_0^t mu_xi(s) ds; t may be +infinity.
inline double drift_integral(const DriftModel& drift, double t) {
  double acc = 0.0;
  for (std::size_t j = 0; j < drift.dim(); ++j) acc += drift.xi()[j] * drift.basis()[j].integral(t);
  return acc;
}

/// d mu_xi(t) / d xi, which is the basis vector (w_j(t))_j.
inline std::vector<double> drift_grad_xi(const DriftModel& drift, double t) {
  std::vector<double> g(drift.dim());
  for (std::size_t j = 0; j < drift.dim(); ++j) g[j] = drift.basis()[j](t);
  return g;
}

/// int_T^inf |mu_xi(s)| ds, the part of the drift's mass beyond horizon T.
inline double dri_tail_mass(const DriftModel& drift, double T) {
  if (!(T > 0.0)) throw ParameterDomainError("dri_tail_mass requires T > 0");
  if (drift.dim() == 0) return 0.0;
  if (drift.dim() == 1) return std::abs(drift.xi()[0]) * drift.basis()[0].abs_tail(T);
  return numerics::integrate([&drift](double s) { return std::abs(drift_eval(drift, s)); }, T,
                             std::numeric_limits<double>::infinity())
      .value;
}

}  // namespace hfgp
