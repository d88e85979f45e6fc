#pragma once

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hfgp/drift.hpp"
#include "hfgp/error.hpp"
#include "hfgp/kernels.hpp"

namespace hfgp {

/// Equispaced sampling grid t_i = i h, i = 0..n.
struct SamplingScheme {
  std::size_t n = 0;
  double h = 0.0;
  std::optional<double> exponent;  // set when h = n^{-a}

  static SamplingScheme fixed(std::size_t n, double h) {
    SamplingScheme s{n, h, std::nullopt};
    s.validate();
    return s;
  }

  static SamplingScheme from_rule(std::size_t n, double a) {
    SamplingScheme s{n, std::pow(static_cast<double>(n), -a), a};
    s.validate();
    return s;
  }

  [[nodiscard]] std::vector<double> grid() const {
    std::vector<double> t(n + 1);
    for (std::size_t i = 0; i <= n; ++i) t[i] = static_cast<double>(i) * h;
    return t;
  }

  [[nodiscard]] double horizon() const { return static_cast<double>(n) * h; }

  // h -> 0 and n h -> infinity hold along the sequence h = n^{-a} iff 0 < a < 1.
  [[nodiscard]] bool high_frequency_regime() const { return exponent && *exponent > 0.0 && *exponent < 1.0; }

  void validate() const {
    if (n < 1) throw ConfigError("sampling scheme needs n >= 1");
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("sampling step h must be positive");
  }
};

enum class SimulationMethod { Auto, CirculantEmbedding, Cholesky };

inline std::string_view method_name(SimulationMethod m) {
  switch (m) {
    case SimulationMethod::Auto: return "auto";
    case SimulationMethod::CirculantEmbedding: return "circulant_embedding";
    case SimulationMethod::Cholesky: return "cholesky";
  }
  return "unknown";
}

inline SimulationMethod parse_method(std::string_view name) {
  if (name == "auto") return SimulationMethod::Auto;
  if (name == "circulant" || name == "circulant_embedding") return SimulationMethod::CirculantEmbedding;
  if (name == "cholesky") return SimulationMethod::Cholesky;
  throw ConfigError("unknown simulation method '" + std::string(name) + "'");
}

struct ModelTruth {
  KernelModel kernel;
  DriftModel drift;
};

/// One observed trajectory X_{t_0..t_n} with its provenance.
struct PathSample {
  std::vector<double> times;
  std::vector<double> values;
  double h = 0.0;
  std::uint64_t seed = 0;
  std::optional<ModelTruth> truth;
  SimulationMethod method = SimulationMethod::Auto;
  std::size_t embedding_size = 0;  // 0 unless circulant embedding was used

  [[nodiscard]] std::size_t n() const { return values.empty() ? 0 : values.size() - 1; }
};

// ---------------------------------------------------------------------------
// Seeds

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based child seed: independent of the order in which children are drawn.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  return splitmix64(splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL)) + index);
}

// ---------------------------------------------------------------------------
// FFTW plumbing

namespace detail {

// FFTW's planner is not thread-safe; plan execution on fresh arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class FftwBuffer {
 public:
  explicit FftwBuffer(std::size_t size)
      : size_(size), data_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size))) {
    if (!data_) throw SimulationError("fftw_malloc failed");
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  FftwBuffer(FftwBuffer&& other) noexcept : size_(other.size_), data_(std::exchange(other.data_, nullptr)) {}
  ~FftwBuffer() {
    if (data_) fftw_free(data_);
  }
  [[nodiscard]] fftw_complex* data() const { return data_; }
  [[nodiscard]] std::size_t size() const { return size_; }

 private:
  std::size_t size_;
  fftw_complex* data_;
};

class FftwForwardPlan {
 public:
  explicit FftwForwardPlan(std::size_t size) : size_(size) {
    FftwBuffer in(size), out(size);
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(static_cast<int>(size), in.data(), out.data(), FFTW_FORWARD, FFTW_ESTIMATE);
    if (!plan_) throw SimulationError("could not create FFT plan of size " + std::to_string(size));
  }
  FftwForwardPlan(const FftwForwardPlan&) = delete;
  FftwForwardPlan& operator=(const FftwForwardPlan&) = delete;
  ~FftwForwardPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  // Thread-safe: new-array execute on buffers allocated with fftw_malloc.
  void execute(const FftwBuffer& in, const FftwBuffer& out) const { fftw_execute_dft(plan_, in.data(), out.data()); }
  [[nodiscard]] std::size_t size() const { return size_; }

 private:
  std::size_t size_;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Samplers

/// Exact sampler for N(0, Gram) on an equispaced grid via circulant embedding
/// of the Toeplitz covariance.
///
/// The embedding starts at the minimal size 2n and doubles (over powers of
/// two) until every circulant eigenvalue is >= -1e-12 * max eigenvalue;
/// remaining small negatives are clipped to zero.
class CirculantSampler {
 public:
  static constexpr double kNegativityTolerance = 1e-12;

  CirculantSampler(const KernelModel& kernel, const SamplingScheme& scheme, std::size_t max_embedding = 1u << 22)
      : points_(scheme.n + 1) {
    std::size_t m = 2 * scheme.n;
    for (;;) {
      if (try_embedding(kernel, scheme.h, m)) return;
      std::size_t next = 1;
      while (next <= m) next <<= 1;
      if (next > max_embedding) break;
      m = next;
    }
    throw SimulationError("circulant embedding has negative spectral mass up to size " +
                          std::to_string(max_embedding));
  }

  [[nodiscard]] std::size_t embedding_size() const { return plan_->size(); }
  [[nodiscard]] std::size_t points() const { return points_; }

  [[nodiscard]] std::vector<double> draw(std::uint64_t seed) const {
    const std::size_t m = plan_->size();
    detail::FftwBuffer in(m), out(m);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (std::size_t k = 0; k < m; ++k) {
      in.data()[k][0] = scale_[k] * normal(rng);
      in.data()[k][1] = scale_[k] * normal(rng);
    }
    plan_->execute(in, out);
    std::vector<double> z(points_);
    for (std::size_t j = 0; j < points_; ++j) z[j] = out.data()[j][0];
    return z;
  }

 private:
  bool try_embedding(const KernelModel& kernel, double h, std::size_t m) {
    auto plan = std::make_unique<detail::FftwForwardPlan>(m);
    detail::FftwBuffer row(m), eig(m);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t lag = std::min(k, m - k);
      row.data()[k][0] = kernel_eval(kernel, static_cast<double>(lag) * h);
      row.data()[k][1] = 0.0;
    }
    plan->execute(row, eig);
    double max_eig = 0.0, min_eig = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      max_eig = std::max(max_eig, eig.data()[k][0]);
      min_eig = std::min(min_eig, eig.data()[k][0]);
    }
    if (!(max_eig > 0.0) || min_eig < -kNegativityTolerance * max_eig) return false;
    scale_.resize(m);
    for (std::size_t k = 0; k < m; ++k)
      scale_[k] = std::sqrt(std::max(eig.data()[k][0], 0.0) / static_cast<double>(m));
    plan_ = std::move(plan);
    return true;
  }

  std::size_t points_;
  std::vector<double> scale_;
  std::unique_ptr<detail::FftwForwardPlan> plan_;
};

/// Dense Cholesky sampler; adds jitter 1e-10 K(0) on the diagonal if the
/// plain factorization fails.
class CholeskySampler {
 public:
  static constexpr std::size_t kMaxPoints = 5001;

  CholeskySampler(const KernelModel& kernel, const SamplingScheme& scheme) {
    if (scheme.n + 1 > kMaxPoints) throw SimulationError("Cholesky sampling is limited to n <= 5000");
    const auto grid = scheme.grid();
    Eigen::MatrixXd gram = gram_matrix(kernel, grid);
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
      jitter_ = 1e-10 * kernel_eval(kernel, 0.0);
      gram.diagonal().array() += jitter_;
      llt.compute(gram);
      if (llt.info() != Eigen::Success) throw SimulationError("Cholesky factorization failed even with jitter");
    }
    factor_ = llt.matrixL();
  }

  [[nodiscard]] double jitter() const { return jitter_; }

  [[nodiscard]] std::vector<double> draw(std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd e(factor_.rows());
    for (Eigen::Index k = 0; k < e.size(); ++k) e(k) = normal(rng);
    const Eigen::VectorXd z = factor_.triangularView<Eigen::Lower>() * e;
    return {z.data(), z.data() + z.size()};
  }

 private:
  Eigen::MatrixXd factor_;
  double jitter_ = 0.0;
};

/// Draws drift-free stationary paths for a fixed (kernel, scheme).
/// Immutable after construction; draw() may be called from many threads.
class GaussianPathSampler {
 public:
  GaussianPathSampler(const KernelModel& kernel, const SamplingScheme& scheme,
                      SimulationMethod method = SimulationMethod::Auto)
      : kernel_(kernel), scheme_(scheme) {
    scheme.validate();
    if (method != SimulationMethod::Cholesky) {
      try {
        impl_.emplace<CirculantSampler>(kernel, scheme);
        method_ = SimulationMethod::CirculantEmbedding;
        return;
      } catch (const SimulationError&) {
        if (method == SimulationMethod::CirculantEmbedding) throw;
      }
    }
    impl_.emplace<CholeskySampler>(kernel, scheme);
    method_ = SimulationMethod::Cholesky;
  }

  [[nodiscard]] SimulationMethod method() const { return method_; }
  [[nodiscard]] const SamplingScheme& scheme() const { return scheme_; }
  [[nodiscard]] const KernelModel& kernel() const { return kernel_; }

  [[nodiscard]] std::size_t embedding_size() const {
    if (const auto* c = std::get_if<CirculantSampler>(&impl_)) return c->embedding_size();
    return 0;
  }

  [[nodiscard]] std::vector<double> draw_values(std::uint64_t seed) const {
    if (const auto* c = std::get_if<CirculantSampler>(&impl_)) return c->draw(seed);
    return std::get<CholeskySampler>(impl_).draw(seed);
  }

  [[nodiscard]] PathSample draw(std::uint64_t seed) const {
    PathSample path;
    path.times = scheme_.grid();
    path.values = draw_values(seed);
    path.h = scheme_.h;
    path.seed = seed;
    path.truth = ModelTruth{kernel_, DriftModel::zero()};
    path.method = method_;
    path.embedding_size = embedding_size();
    return path;
  }

 private:
  KernelModel kernel_;
  SamplingScheme scheme_;
  SimulationMethod method_ = SimulationMethod::Auto;
  std::variant<std::monostate, CirculantSampler, CholeskySampler> impl_;
};

inline PathSample sample_stationary_gp(const KernelModel& kernel, const SamplingScheme& scheme, std::uint64_t seed,
                                       SimulationMethod method = SimulationMethod::Auto) {
  return GaussianPathSampler(kernel, scheme, method).draw(seed);
}

/// Adds the integrated drift to a drift-free path: X_{t_i} = Z_{t_i} + int_0^{t_i} mu.
inline PathSample add_drift(PathSample path, const DriftModel& drift) {
  for (std::size_t i = 0; i < path.values.size(); ++i) path.values[i] += drift_integral(drift, path.times[i]);
  if (path.truth) path.truth->drift = drift;
  return path;
}

inline PathSample simulate_model(const KernelModel& kernel, const DriftModel& drift, const SamplingScheme& scheme,
                                 std::uint64_t seed, SimulationMethod method = SimulationMethod::Auto) {
  return add_drift(sample_stationary_gp(kernel, scheme, seed, method), drift);
}

/// Biased sample autocovariance (denominator N) for lags 0..maxlag.
inline std::vector<double> empirical_covariance(std::span<const double> x, std::size_t maxlag, bool demean = true) {
  const std::size_t N = x.size();
  if (maxlag >= N) throw ConfigError("maxlag must be smaller than the series length");
  double mu = 0.0;
  if (demean) {
    for (double v : x) mu += v;
    mu /= static_cast<double>(N);
  }
  std::vector<double> acov(maxlag + 1, 0.0);
  for (std::size_t k = 0; k <= maxlag; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < N; ++i) acc += (x[i] - mu) * (x[i + k] - mu);
    acov[k] = acc / static_cast<double>(N);
  }
  return acov;
}

inline std::vector<double> empirical_covariance(const PathSample& path, std::size_t maxlag, bool demean = true) {
  return empirical_covariance(path.values, maxlag, demean);
}

}  // namespace hfgp
