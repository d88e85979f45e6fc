#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hfgp/hfgp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hfgp;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> sets;
  std::optional<std::string> case_id;
  std::optional<std::size_t> n;
  std::optional<std::size_t> reps;
  std::optional<unsigned> jobs;
  std::string path_csv;
};

fs::path output_dir(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("HFGP_OUT_DIR"); env && *env) return env;
  return "out";
}

json effective_config(const Common& c, const std::string& sub) {
  json doc = c.config_path.empty() ? json::object() : config::load_file(c.config_path);
  for (const auto& s : c.sets) config::apply_override(doc, s);
  if (c.seed) doc["seed"] = *c.seed;
  if (c.case_id) doc["experiment"]["case"] = *c.case_id;
  if (c.reps) doc["experiment"]["reps"] = *c.reps;
  if (c.jobs) doc["experiment"]["jobs"] = *c.jobs;
  if (c.n) {
    if (sub == "replicate" || sub == "qq") {
      doc["experiment"]["n_values"] = json::array({*c.n});
    } else {
      doc["sampling"]["n"] = *c.n;
    }
  }
  config::validate(doc);
  return doc;
}

fs::path config_dir(const Common& c) {
  return c.config_path.empty() ? fs::path{} : fs::path(c.config_path).parent_path();
}

std::uint64_t seed_of(const json& doc) { return config::get_or<std::uint64_t>(doc, "seed", 42); }

void report_done(const fs::path& dir, const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << (dir / f).string() << '\n';
}

// ---------------------------------------------------------------------------

int run_simulate(const Common& c) {
  const json doc = effective_config(c, "simulate");
  const auto kernel = config::kernel_from(doc);
  const auto drift = config::drift_from(doc, config_dir(c));
  const auto scheme = config::scheme_from(doc);
  const auto seed = seed_of(doc);
  const auto path = simulate_model(kernel, drift, scheme, seed, config::method_from(doc));
  const fs::path dir = output_dir(c);
  io::write_path(dir / "path.csv", path);
  const std::vector<std::string> files{"path.csv", "path.csv.json"};
  io::write_manifest(dir, "simulate", doc, seed, files);
  report_done(dir, files);
  return 0;
}

std::vector<bool> free_mask(const json& est, const DriftModel& drift, const KernelModel& kernel) {
  const auto names = family_param_names(kernel.family());
  std::vector<bool> mask(drift.dim() + names.size(), true);
  if (!est.contains("free")) return mask;
  const auto wanted = est.at("free").get<std::vector<std::string>>();
  for (std::size_t k = 0; k < names.size(); ++k) {
    mask[drift.dim() + k] = std::find(wanted.begin(), wanted.end(), std::string(names[k])) != wanted.end();
  }
  return mask;
}

int run_estimate(const Common& c) {
  if (c.path_csv.empty()) throw ConfigError("estimate needs --path <csv>");
  const json doc = effective_config(c, "estimate");
  const auto path = io::read_path(c.path_csv);
  const auto kernel_family = config::kernel_from(doc);
  const auto base = config::drift_from(doc, config_dir(c));
  const auto drift_family = base.with_xi(std::vector<double>(base.dim(), 0.0));
  const auto& est = config::section(doc, "estimate");
  const auto method = config::get_or<std::string>(est, "method", "closed_form");

  EstimateReport report;
  std::vector<std::size_t> sigma_index;
  KernelModel fitted = kernel_family;
  if (method == "closed_form") {
    const auto fit = estimate_gaussian_kernel_model(path, drift_family);
    const double alpha = moment_alpha(detrend(path, drift_family, fit.xi_hat));
    auto params = std::vector<double>(kernel_family.params().begin(), kernel_family.params().end());
    params[0] = alpha;
    params[1] = beta_from_curvature(kernel_family.with_params(params), fit.gamma_hat);
    fitted = kernel_family.with_params(params);
    report.method = "closed_form";
    for (std::size_t j = 0; j < fit.xi_hat.size(); ++j)
      report.add(fit.xi_hat.size() == 1 ? "xi" : "xi" + std::to_string(j + 1), fit.xi_hat[j], kDriftRate);
    report.add("alpha", params[0], kKernelRate);
    report.add("beta", params[1], kKernelRate);
    report.diagnostics["gamma_hat"] = fit.gamma_hat;
    sigma_index = {0, 1};
  } else if (method == "contrast") {
    ContrastOptions opt;
    opt.mode = config::variance_mode_from(config::get_or<std::string>(est, "variance_mode", "exact"));
    opt.free = free_mask(est, drift_family, kernel_family);
    // held-fixed kernel components keep their configured values
    auto init = pilot_estimate(path, drift_family, kernel_family);
    for (std::size_t k = drift_family.dim(); k < init.size(); ++k)
      if (!opt.free[k]) init[k] = kernel_family.params()[k - drift_family.dim()];
    opt.init = init;
    report = minimize_contrast(path, drift_family, kernel_family, opt);
    std::vector<double> params(kernel_family.params().begin(), kernel_family.params().end());
    const auto names = family_param_names(kernel_family.family());
    for (std::size_t k = 0; k < names.size(); ++k) {
      if (const auto* e = report.find(names[k])) {
        params[k] = e->value;
        sigma_index.push_back(k);
      }
    }
    fitted = kernel_family.with_params(params);
  } else if (method == "rq") {
    RqOptions opt;
    opt.delta = config::delta_convention_from(config::get_or<std::string>(est, "delta_convention", "moment_matching"));
    opt.k4 = config::k4_formula_from(config::get_or<std::string>(est, "k4_formula", "inversion"));
    try {
      report = rq_estimate(path, drift_family, opt);
      fitted = KernelModel::rational_quadratic(report.value("alpha"), report.value("beta"), report.value("gamma"));
      sigma_index = {0, 1};
    } catch (const GammaUnidentified& e) {
      report = e.partial();
      std::cerr << "warning: " << e.what() << '\n';
    }
  } else if (method == "mollified_ou") {
    const auto xi = least_squares_drift(path, drift_family);
    const double alpha = config::get_or<double>(est, "alpha", moment_alpha(detrend(path, drift_family, xi)));
    const double eps = config::get_or<double>(est, "epsilon", path.h / 2.0);
    const auto scaling = config::ou_scaling_from(config::get_or<std::string>(est, "ou_scaling", "efficient"));
    report.method = "mollified_ou";
    for (std::size_t j = 0; j < xi.size(); ++j) report.add(xi.size() == 1 ? "xi" : "xi" + std::to_string(j + 1), xi[j], kDriftRate);
    report.add("alpha", alpha, kKernelRate);
    report.add("beta", mollified_ou_beta(path, alpha, eps, scaling), kKernelRate);
    report.diagnostics["epsilon"] = eps;
    report.diagnostics["sde_benchmark_beta"] = sde_benchmark_beta(path, alpha, scaling);
  } else {
    throw ConfigError("unknown estimate.method '" + method + "'");
  }

  json out{{"report", io::to_json(report)}};
  if (config::get_or<bool>(est, "asymptotics", true) && !sigma_index.empty()) {
    try {
      const auto info = fisher_blocks(fitted, report.find("xi") || report.find("xi1")
                                                  ? drift_family.with_xi(least_squares_drift(path, drift_family))
                                                  : DriftModel::zero(),
                                      sigma_index);
      SamplingScheme scheme{path.n(), path.h, std::nullopt};
      report = standard_errors(report, info, scheme);
      out["report"] = io::to_json(report);
      out["asymptotics"] = io::to_json(info);
    } catch (const Error& e) {
      out["asymptotics"] = {{"error", e.what()}};
    }
  }
  const fs::path dir = output_dir(c);
  io::write_json(dir / "report.json", out);
  const std::vector<std::string> files{"report.json"};
  json effective = doc;
  effective["input"] = {{"path", c.path_csv}};
  io::write_manifest(dir, "estimate", effective, seed_of(doc), files);
  report_done(dir, files);
  return 0;
}

int run_moments(const Common& c) {
  if (c.path_csv.empty()) throw ConfigError("moments needs --path <csv>");
  const json doc = effective_config(c, "moments");
  const auto path = io::read_path(c.path_csv);
  const auto base = config::drift_from(doc, config_dir(c));
  const auto drift_family = base.with_xi(std::vector<double>(base.dim(), 0.0));
  const auto& m = config::section(doc, "moments");
  const auto xi = m.contains("xi") ? m.at("xi").get<std::vector<double>>() : least_squares_drift(path, drift_family);
  const auto series = detrend(path, drift_family, xi);

  json out;
  out["xi_used"] = xi;
  out["alpha_hat"] = moment_alpha(series);
  out["beta_hat"] = moment_beta(series);
  json inc = json::array();
  for (int kappa : config::get_or<std::vector<int>>(m, "kappa", {1, 2, 3})) {
    json row{{"kappa", kappa}, {"value", empirical_increment_moment(series, kappa)}};
    if (doc.contains("kernel")) {
      try {
        row["limit"] = increment_moment_limit(config::kernel_from(doc), kappa);
      } catch (const CapabilityError&) {
      }
    }
    inc.push_back(row);
  }
  out["increment_moments"] = inc;

  std::vector<MomentCondition> conditions;
  for (const auto& f : config::get_or<std::vector<std::string>>(m, "functions", {})) conditions.emplace_back(LevelMoment::by_name(f));
  json pairs = json::array();
  for (const auto& g : config::get_or<std::vector<std::string>>(m, "pairs", {"(y-x)^2", "(y-x)y^2"})) {
    const auto pf = PairFunctional::by_name(g);
    json row{{"name", pf.name}, {"value", g_functional(series, pf)}};
    if (doc.contains("kernel")) {
      try {
        row["limit"] = g_functional_limit(pf, config::kernel_from(doc));
      } catch (const CapabilityError&) {
      }
    }
    pairs.push_back(row);
    if (m.contains("pairs")) conditions.emplace_back(PairMoment{pf});
  }
  out["g_functionals"] = pairs;

  if (m.contains("free")) {
    const auto kernel = config::kernel_from(doc);
    const auto names = family_param_names(kernel.family());
    std::vector<std::size_t> free;
    for (const auto& want : m.at("free").get<std::vector<std::string>>()) {
      const auto it = std::find(names.begin(), names.end(), want);
      if (it == names.end()) throw ConfigError("moments.free: unknown parameter '" + want + "'");
      free.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    const auto z = z_estimator(series, conditions, kernel, free);
    const auto bw = config::get_or<std::size_t>(m, "bandwidth", default_bandwidth(series.n()));
    const auto se = z_estimator_std_errors(series, conditions, z.kernel, free, bw);
    json zj{{"kernel", io::to_json(z.kernel)}, {"iterations", z.iterations}, {"residual_norm", z.residual_norm},
            {"newey_west_bandwidth", bw}, {"std_errors_newey_west_approximation", json::object()}};
    for (std::size_t k = 0; k < free.size(); ++k) zj["std_errors_newey_west_approximation"][std::string(names[free[k]])] = se[k];
    out["z_estimate"] = zj;
  }

  const fs::path dir = output_dir(c);
  io::write_json(dir / "moments.json", out);
  const std::vector<std::string> files{"moments.json"};
  json effective = doc;
  effective["input"] = {{"path", c.path_csv}};
  io::write_manifest(dir, "moments", effective, seed_of(doc), files);
  report_done(dir, files);
  return 0;
}

int run_replicate(const Common& c, bool qq) {
  const json doc = effective_config(c, qq ? "qq" : "replicate");
  const auto cfg = config::experiment_from(doc);
  const auto records = run_case(cfg);
  const fs::path dir = output_dir(c);
  std::vector<std::string> files;
  if (!qq) {
    const auto table = summarize(records, cfg);
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << '\n';
    io::write_summary_csv(dir / "summary.csv", table);
    io::write_records_csv(dir / "records.csv", records);
    files = {"summary.csv", "records.csv"};
  } else {
    json corr = json::object();
    for (std::size_t n : cfg.n_values) {
      for (auto est : kEstimators) {
        const auto pts = qq_data(records, cfg, n, est);
        const std::string name = "qq_" + std::string(est) + "_" + std::to_string(n) + ".csv";
        io::write_qq_csv(dir / name, pts);
        files.push_back(name);
        corr[std::string(est)][std::to_string(n)] = qq_correlation(pts);
      }
    }
    io::write_json(dir / "qq_correlation.json", corr);
    files.push_back("qq_correlation.json");
  }
  io::write_manifest(dir, qq ? "qq" : "replicate", doc, cfg.master_seed, files);
  report_done(dir, files);
  return 0;
}

int run_kernel_info(const Common& c) {
  const json doc = effective_config(c, "kernel-info");
  const auto kernel = config::kernel_from(doc);
  const auto& ki = config::section(doc, "kernel_info");
  std::vector<double> lags;
  if (ki.contains("lags")) {
    lags = ki.at("lags").get<std::vector<double>>();
  } else {
    const double max_lag = config::get_or<double>(ki, "max_lag", 3.0);
    const auto count = config::get_or<std::size_t>(ki, "count", 31);
    if (count < 2) throw ConfigError("kernel_info.count must be >= 2");
    for (std::size_t k = 0; k < count; ++k) lags.push_back(max_lag * static_cast<double>(k) / static_cast<double>(count - 1));
  }
  const fs::path dir = output_dir(c);
  {
    auto out = io::open_out(dir / "kernel.csv");
    out << "t,K,gap,local_variance\n";
    for (double t : lags) {
      out << io::format_number(t) << ',' << io::format_number(kernel_eval(kernel, t)) << ','
          << io::format_number(kernel_gap(kernel, t)) << ','
          << io::format_number(t > 0.0 ? local_variance(kernel, t) : 0.0) << '\n';
    }
  }
  json info{{"kernel", io::to_json(kernel)}, {"K0", kernel_eval(kernel, 0.0)}};
  try {
    info["d2_at_zero"] = kernel_d2_at_zero(kernel);
  } catch (const CapabilityError& e) {
    info["d2_at_zero"] = nullptr;
    info["d2_note"] = e.what();
  }
  try {
    info["d4_at_zero"] = kernel_d4_at_zero(kernel);
  } catch (const CapabilityError& e) {
    info["d4_at_zero"] = nullptr;
    info["d4_note"] = e.what();
  }
  io::write_json(dir / "kernel.json", info);
  const std::vector<std::string> files{"kernel.csv", "kernel.json"};
  io::write_manifest(dir, "kernel-info", doc, seed_of(doc), files);
  report_done(dir, files);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hfgp: estimation for stationary Gaussian processes with drift under high-frequency sampling"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&c](CLI::App* sub) {
    sub->add_option("--config", c.config_path, "JSON configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", c.seed, "master seed");
    sub->add_option("--out", c.out, "output directory (default: $HFGP_OUT_DIR or ./out)");
    sub->add_option("--set", c.sets, "override a configuration key, section.key=value")->allow_extra_args(false);
  };
  auto add_experiment = [&c](CLI::App* sub) {
    sub->add_option("--case", c.case_id, "I, II, III or custom");
    sub->add_option("--n", c.n, "single sample size");
    sub->add_option("--reps", c.reps, "replications per sample size");
    sub->add_option("--jobs", c.jobs, "worker threads");
  };

  auto* simulate = app.add_subcommand("simulate", "simulate one path");
  add_common(simulate);
  simulate->add_option("--n", c.n, "number of increments");
  auto* estimate = app.add_subcommand("estimate", "estimate drift and kernel parameters from a path");
  add_common(estimate);
  estimate->add_option("--path", c.path_csv, "path CSV written by simulate")->required();
  auto* moments = app.add_subcommand("moments", "moment statistics of a path");
  add_common(moments);
  moments->add_option("--path", c.path_csv, "path CSV written by simulate")->required();
  auto* replicate = app.add_subcommand("replicate", "Monte Carlo study: summary.csv and records.csv");
  add_common(replicate);
  add_experiment(replicate);
  auto* qq = app.add_subcommand("qq", "Monte Carlo study: QQ data per estimator and n");
  add_common(qq);
  add_experiment(qq);
  auto* kernel_info = app.add_subcommand("kernel-info", "kernel values and derivatives on a lag grid");
  add_common(kernel_info);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*simulate) return run_simulate(c);
    if (*estimate) return run_estimate(c);
    if (*moments) return run_moments(c);
    if (*replicate) return run_replicate(c, false);
    if (*qq) return run_replicate(c, true);
    if (*kernel_info) return run_kernel_info(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ParameterDomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const CapabilityError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
