#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hfgp/contrast.hpp"
#include "hfgp/drift.hpp"
#include "hfgp/error.hpp"
#include "hfgp/experiments.hpp"
#include "hfgp/kernels.hpp"
#include "hfgp/moments.hpp"
#include "hfgp/simulate.hpp"

namespace hfgp::config {

using json = nlohmann::json;

// Allowed keys per section. Anything else is a ConfigError.
inline const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"", {"kernel", "drift", "sampling", "simulation", "seed", "estimate", "moments", "experiment", "kernel_info"}},
      {"kernel", {"family", "alpha", "beta", "nu", "gamma", "epsilon"}},
      {"drift", {"profile", "xi", "rate", "table", "tail_rate"}},
      {"sampling", {"n", "h", "a"}},
      {"simulation", {"method"}},
      {"estimate",
       {"method", "variance_mode", "free", "epsilon", "alpha", "ou_scaling", "delta_convention", "k4_formula",
        "asymptotics"}},
      {"moments", {"functions", "pairs", "free", "bandwidth", "kappa", "xi"}},
      {"experiment", {"case", "n_values", "reps", "a", "xi0", "alpha0", "beta0", "joint", "jobs"}},
      {"kernel_info", {"max_lag", "count", "lags"}},
  };
  return s;
}

inline void validate(const json& doc) {
  if (!doc.is_object()) throw ConfigError("configuration must be a JSON object");
  const auto& s = schema();
  for (const auto& [key, value] : doc.items()) {
    if (!s.at("").contains(key)) throw ConfigError("unknown configuration key '" + key + "'");
    if (key == "seed") {
      if (!value.is_number_integer() || value.get<std::int64_t>() < 0) throw ConfigError("'seed' must be a non-negative integer");
      continue;
    }
    if (!value.is_object()) throw ConfigError("section '" + key + "' must be an object");
    for (const auto& [inner, _] : value.items()) {
      if (!s.at(key).contains(inner)) throw ConfigError("unknown configuration key '" + key + "." + inner + "'");
    }
  }
}

inline json load_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file '" + file.string() + "'");
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + file.string() + "': " + e.what());
  }
}

/// Applies "section.key=value". The value is read as JSON when it parses,
/// otherwise as a plain string.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::stringstream parts(key);
  std::string part;
  std::vector<std::string> path;
  while (std::getline(parts, part, '.')) path.push_back(part);
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    if (!node->contains(path[k])) (*node)[path[k]] = json::object();
    node = &(*node)[path[k]];
  }
  (*node)[path.back()] = value;
}

template <class T>
T get_or(const json& section, const char* key, T fallback) {
  if (!section.is_object() || !section.contains(key)) return fallback;
  try {
    return section.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline const json& section(const json& doc, const char* name) {
  static const json empty = json::object();
  return doc.contains(name) ? doc.at(name) : empty;
}

// ---------------------------------------------------------------------------

inline KernelModel kernel_from(const json& doc) {
  const auto& k = section(doc, "kernel");
  const auto family = parse_family(get_or<std::string>(k, "family", "gaussian"));
  std::vector<double> params;
  for (auto name : family_param_names(family)) {
    const std::string key(name);
    if (!k.contains(key)) {
      if (key == "alpha" || key == "beta") {
        params.push_back(1.0);
        continue;
      }
      throw ConfigError("kernel family '" + std::string(family_name(family)) + "' needs '" + key + "'");
    }
    params.push_back(get_or<double>(k, key.c_str(), 0.0));
  }
  return {family, params};
}

inline std::vector<double> read_two_column_csv(const std::filesystem::path& file, std::string& header_out);

inline DriftModel drift_from(const json& doc, const std::filesystem::path& base_dir = {}) {
  const auto& d = section(doc, "drift");
  const auto profile = get_or<std::string>(d, "profile", "exp_decay");
  const double xi = get_or<double>(d, "xi", 0.0);
  if (profile == "zero" || profile == "none") return DriftModel::zero();
  if (profile == "exp_decay") {
    const double rate = get_or<double>(d, "rate", 1.0);
    if (rate == 1.0) return DriftModel::exp_decay(xi);
    return DriftModel::scaled(Profile::exp_decay(rate), xi);
  }
  if (profile == "table") {
    auto file = std::filesystem::path(get_or<std::string>(d, "table", ""));
    if (file.empty()) throw ConfigError("drift.profile = table needs drift.table = <csv file>");
    if (file.is_relative() && !base_dir.empty()) file = base_dir / file;
    std::string header;
    const auto flat = read_two_column_csv(file, header);
    std::vector<double> t, w;
    for (std::size_t k = 0; k < flat.size(); k += 2) {
      t.push_back(flat[k]);
      w.push_back(flat[k + 1]);
    }
    return DriftModel::scaled(Profile::tabulated(t, w, get_or<double>(d, "tail_rate", 0.0)), xi);
  }
  throw ConfigError("unknown drift profile '" + profile + "'");
}

inline SamplingScheme scheme_from(const json& doc) {
  const auto& s = section(doc, "sampling");
  const auto n = get_or<std::size_t>(s, "n", 500);
  if (s.contains("h") && s.contains("a")) throw ConfigError("sampling: give either h or a, not both");
  if (s.contains("h")) return SamplingScheme::fixed(n, get_or<double>(s, "h", 0.0));
  return SamplingScheme::from_rule(n, get_or<double>(s, "a", 0.4));
}

inline SimulationMethod method_from(const json& doc) {
  return parse_method(get_or<std::string>(section(doc, "simulation"), "method", "auto"));
}

inline ExperimentConfig experiment_from(const json& doc) {
  const auto& e = section(doc, "experiment");
  auto cfg = ExperimentConfig::preset(parse_case(get_or<std::string>(e, "case", "I")));
  cfg.n_values = get_or<std::vector<std::size_t>>(e, "n_values", cfg.n_values);
  cfg.reps = get_or<std::size_t>(e, "reps", cfg.reps);
  cfg.a = get_or<double>(e, "a", cfg.a);
  cfg.xi0 = get_or<double>(e, "xi0", cfg.xi0);
  cfg.alpha0 = get_or<double>(e, "alpha0", cfg.alpha0);
  cfg.beta0 = get_or<double>(e, "beta0", cfg.beta0);
  cfg.joint = get_or<bool>(e, "joint", cfg.joint);
  cfg.jobs = get_or<unsigned>(e, "jobs", cfg.jobs);
  cfg.master_seed = get_or<std::uint64_t>(doc, "seed", cfg.master_seed);
  cfg.method = method_from(doc);
  cfg.validate();
  return cfg;
}

inline VarianceMode variance_mode_from(const std::string& s) {
  if (s == "exact") return VarianceMode::Exact;
  if (s == "leading_order") return VarianceMode::LeadingOrder;
  throw ConfigError("unknown variance_mode '" + s + "'");
}

inline OuScaling ou_scaling_from(const std::string& s) {
  if (s == "efficient") return OuScaling::Efficient;
  if (s == "as_printed") return OuScaling::AsPrinted;
  throw ConfigError("unknown ou_scaling '" + s + "'");
}

inline DeltaConvention delta_convention_from(const std::string& s) {
  if (s == "moment_matching") return DeltaConvention::MomentMatching;
  if (s == "printed_half") return DeltaConvention::PrintedHalf;
  throw ConfigError("unknown delta_convention '" + s + "'");
}

inline K4Formula k4_formula_from(const std::string& s) {
  if (s == "inversion") return K4Formula::Inversion;
  if (s == "printed_remark") return K4Formula::PrintedRemark;
  if (s == "printed_rq") return K4Formula::PrintedRationalQuadratic;
  throw ConfigError("unknown k4_formula '" + s + "'");
}

// ---------------------------------------------------------------------------

/// Two numeric columns after a mandatory header line; returns (c0, c1) pairs flattened.
inline std::vector<double> read_two_column_csv(const std::filesystem::path& file, std::string& header_out) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open '" + file.string() + "'");
  if (!std::getline(in, header_out)) throw ConfigError("'" + file.string() + "' is empty");
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": expected two columns");
    try {
      out.push_back(std::stod(line.substr(0, comma)));
      out.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw ConfigError(file.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return out;
}

}  // namespace hfgp::config
