#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "hfgp/contrast.hpp"
#include "hfgp/drift.hpp"
#include "hfgp/kernels.hpp"
#include "hfgp/moments.hpp"
#include "hfgp/numerics.hpp"
#include "hfgp/simulate.hpp"

namespace hfgp {

enum class Case { I, II, III, Custom };

inline std::string_view case_name(Case c) {
  switch (c) {
    case Case::I: return "I";
    case Case::II: return "II";
    case Case::III: return "III";
    case Case::Custom: return "custom";
  }
  return "custom";
}

inline Case parse_case(std::string_view s) {
  if (s == "I" || s == "1" || s == "i") return Case::I;
  if (s == "II" || s == "2" || s == "ii") return Case::II;
  if (s == "III" || s == "3" || s == "iii") return Case::III;
  if (s == "custom" || s == "Custom") return Case::Custom;
  throw ConfigError("unknown case '" + std::string(s) + "' (expected I, II, III or custom)");
}

/// Monte Carlo design: ExpDecay drift with a Gaussian kernel, h = n^{-a}.
struct ExperimentConfig {
  Case case_id = Case::I;
  std::vector<std::size_t> n_values{500, 1000, 3000};
  std::size_t reps = 500;
  std::uint64_t master_seed = 42;
  double a = 0.4;
  double xi0 = 2.0;
  double alpha0 = 1.0;
  double beta0 = 1.0;
  bool joint = false;  // true: alpha and beta use the estimated xi
  unsigned jobs = 1;
  SimulationMethod method = SimulationMethod::Auto;

  static ExperimentConfig preset(Case c) {
    ExperimentConfig cfg;
    cfg.case_id = c;
    if (c == Case::II) cfg.joint = true;
    if (c == Case::III) cfg.a = 0.8;
    return cfg;
  }

  void validate() const {
    if (reps < 1) throw ConfigError("reps must be >= 1");
    if (n_values.empty()) throw ConfigError("n_values must not be empty");
    for (auto n : n_values)
      if (n < 2) throw ConfigError("every n must be >= 2");
    if (!(a > 0.0)) throw ConfigError("h exponent a must be positive");
    if (!(alpha0 > 0.0) || !(beta0 > 0.0)) throw ConfigError("alpha0 and beta0 must be positive");
  }
};

inline constexpr std::array<std::string_view, 3> kEstimators{"xi", "alpha", "beta"};

struct ReplicationRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  double xi = std::numeric_limits<double>::quiet_NaN();
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double beta = std::numeric_limits<double>::quiet_NaN();
  std::string error;

  [[nodiscard]] double get(std::string_view estimator) const {
    if (estimator == "xi") return xi;
    if (estimator == "alpha") return alpha;
    if (estimator == "beta") return beta;
    throw ConfigError("unknown estimator '" + std::string(estimator) + "'");
  }
};

/// Estimates for one path. Case I/III de-trend with the true xi0 and divide by
/// the true alpha0; Case II uses xi_hat and alpha_hat throughout.
inline ReplicationRecord estimate_replication(const PathSample& path, const ExperimentConfig& cfg) {
  ReplicationRecord rec;
  rec.n = path.n();
  rec.seed = path.seed;
  const auto family = DriftModel::exp_decay(0.0);
  const auto fit = estimate_gaussian_kernel_model(path, family);
  rec.xi = fit.xi_hat[0];
  if (cfg.joint) {
    rec.alpha = moment_alpha(detrend(path, family, fit.xi_hat));
    rec.beta = fit.gamma_hat / rec.alpha;
  } else {
    const std::vector<double> xi0{cfg.xi0};
    rec.alpha = moment_alpha(detrend(path, family, xi0));
    const auto r = drift_residuals(path, family.with_xi(xi0));
    const double gamma0 = sum_of_powers(r, 2) / (static_cast<double>(r.size()) * path.h * path.h);
    rec.beta = gamma0 / cfg.alpha0;
  }
  rec.ok = std::isfinite(rec.xi) && std::isfinite(rec.alpha) && std::isfinite(rec.beta);
  if (!rec.ok) rec.error = "non-finite estimate";
  return rec;
}

/// All replications for every n. Record k of cell n uses seed
/// derive_seed(master_seed, n, k), so results do not depend on `jobs`.
inline std::vector<ReplicationRecord> run_case(const ExperimentConfig& cfg) {
  cfg.validate();
  const KernelModel kernel = KernelModel::gaussian(cfg.alpha0, cfg.beta0);
  const DriftModel drift = DriftModel::exp_decay(cfg.xi0);
  std::vector<ReplicationRecord> records(cfg.n_values.size() * cfg.reps);

  for (std::size_t cell = 0; cell < cfg.n_values.size(); ++cell) {
    const std::size_t n = cfg.n_values[cell];
    const auto scheme = SamplingScheme::from_rule(n, cfg.a);
    const GaussianPathSampler sampler(kernel, scheme, cfg.method);
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    auto worker = [&] {
      for (std::size_t k = next++; k < cfg.reps; k = next++) {
        auto& rec = records[cell * cfg.reps + k];
        const std::uint64_t seed = derive_seed(cfg.master_seed, n, k);
        try {
          rec = estimate_replication(add_drift(sampler.draw(seed), drift), cfg);
        } catch (const NumericalError& e) {
          rec = ReplicationRecord{};
          rec.error = e.what();
        } catch (...) {
          std::lock_guard lock(fatal_mutex);
          if (!fatal) fatal = std::current_exception();
        }
        rec.n = n;
        rec.rep = k;
        rec.seed = seed;
      }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(cfg.reps)));
    if (jobs == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);
  }
  return records;
}

struct SummaryRow {
  std::size_t n = 0;
  std::string estimator;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t reps_ok = 0;
  std::size_t reps_failed = 0;
};

struct SummaryTable {
  Case case_id = Case::I;
  std::vector<SummaryRow> rows;
  std::map<std::string, double> truth;
  std::map<std::size_t, double> dri_tail;  // int_{nh}^inf |mu| per n
  std::vector<std::string> warnings;

  [[nodiscard]] const SummaryRow& at(std::size_t n, std::string_view estimator) const {
    for (const auto& r : rows)
      if (r.n == n && r.estimator == estimator) return r;
    throw ConfigError("summary has no cell (n=" + std::to_string(n) + ", " + std::string(estimator) + ")");
  }
};

inline std::vector<double> cell_values(const std::vector<ReplicationRecord>& records, std::size_t n,
                                       std::string_view estimator) {
  std::vector<double> v;
  for (const auto& r : records)
    if (r.n == n && r.ok) v.push_back(r.get(estimator));
  return v;
}

inline SummaryTable summarize(const std::vector<ReplicationRecord>& records, const ExperimentConfig& cfg) {
  SummaryTable table;
  table.case_id = cfg.case_id;
  table.truth = {{"xi", cfg.xi0}, {"alpha", cfg.alpha0}, {"beta", cfg.beta0}};
  const auto drift = DriftModel::exp_decay(cfg.xi0);
  for (std::size_t n : cfg.n_values) {
    std::size_t failed = 0;
    for (const auto& r : records)
      if (r.n == n && !r.ok) ++failed;
    table.dri_tail[n] = dri_tail_mass(drift, SamplingScheme::from_rule(n, cfg.a).horizon());
    for (auto est : kEstimators) {
      const auto v = cell_values(records, n, est);
      if (v.empty()) {
        table.warnings.push_back("no successful replications for n=" + std::to_string(n) + ", " + std::string(est));
        continue;
      }
      table.rows.push_back({n, std::string(est), numerics::mean(v), v.size() > 1 ? numerics::sample_sd(v) : 0.0,
                            v.size(), failed});
    }
  }
  return table;
}

// ---------------------------------------------------------------------------
// QQ data

struct QQPoint {
  double theoretical;
  double empirical;
};

/// Sorted rate * (estimate - truth), optionally divided by an asymptotic sd,
/// paired with standard normal quantiles at (i - 0.5) / m.
inline std::vector<QQPoint> qq_data(std::vector<double> values, double truth, double rate,
                                    std::optional<double> studentize_by = std::nullopt) {
  if (values.size() < 30) throw ConfigError("qq_data needs at least 30 records");
  const double scale = studentize_by ? rate / *studentize_by : rate;
  for (auto& v : values) v = scale * (v - truth);
  std::sort(values.begin(), values.end());
  std::vector<QQPoint> out(values.size());
  const double m = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = {numerics::normal_quantile((static_cast<double>(i) + 0.5) / m), values[i]};
  }
  return out;
}

/// D_n rate for an estimator: h^{-1/2} for xi, sqrt(n) for kernel parameters.
inline double estimator_rate(std::string_view estimator, std::size_t n, double a) {
  if (estimator == "xi") return std::pow(static_cast<double>(n), 0.5 * a);
  return std::sqrt(static_cast<double>(n));
}

inline std::vector<QQPoint> qq_data(const std::vector<ReplicationRecord>& records, const ExperimentConfig& cfg,
                                    std::size_t n, std::string_view estimator) {
  const std::map<std::string_view, double> truth{{"xi", cfg.xi0}, {"alpha", cfg.alpha0}, {"beta", cfg.beta0}};
  return qq_data(cell_values(records, n, estimator), truth.at(estimator), estimator_rate(estimator, n, cfg.a));
}

inline double qq_correlation(const std::vector<QQPoint>& points) {
  std::vector<double> x, y;
  for (const auto& p : points) {
    x.push_back(p.theoretical);
    y.push_back(p.empirical);
  }
  return numerics::pearson_correlation(x, y);
}

}  // namespace hfgp
