#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <fftw3.h>
#include <json.hpp>

#include "hfgp/asymptotics.hpp"
#include "hfgp/config.hpp"
#include "hfgp/contrast.hpp"
#include "hfgp/experiments.hpp"
#include "hfgp/simulate.hpp"

namespace hfgp::io {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal string that parses back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  const auto res = std::to_chars(buf, buf + 16, v, 16);
  std::string s(buf, res.ptr);
  return std::string(16 - s.size(), '0') + s;
}

inline std::ofstream open_out(const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + file.string() + "'");
  return out;
}

inline void write_json(const std::filesystem::path& file, const json& doc) {
  auto out = open_out(file);
  out << doc.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Models

inline json to_json(const KernelModel& k) {
  json j{{"family", std::string(family_name(k.family()))}};
  const auto names = family_param_names(k.family());
  for (std::size_t i = 0; i < names.size(); ++i) j[std::string(names[i])] = k.params()[i];
  return j;
}

inline json to_json(const DriftModel& d) {
  if (d.kind() == DriftModel::Kind::Zero) return {{"profile", "zero"}};
  if (d.kind() == DriftModel::Kind::ExpDecay) return {{"profile", "exp_decay"}, {"xi", d.xi()[0]}};
  json j{{"profile", d.basis()[0].name()}};
  j["xi"] = std::vector<double>(d.xi().begin(), d.xi().end());
  return j;
}

// ---------------------------------------------------------------------------
// Paths: "<name>.csv" with header t,x plus "<name>.csv.json" sidecar

inline std::filesystem::path sidecar_of(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".json");
}

inline void write_path(const std::filesystem::path& csv, const PathSample& path) {
  {
    auto out = open_out(csv);
    out << "t,x\n";
    for (std::size_t i = 0; i < path.values.size(); ++i)
      out << format_number(path.times[i]) << ',' << format_number(path.values[i]) << '\n';
  }
  json side{{"n", path.n()},
            {"h", path.h},
            {"seed", path.seed},
            {"method", std::string(method_name(path.method))},
            {"embedding_size", path.embedding_size}};
  if (path.truth) side["truth"] = {{"kernel", to_json(path.truth->kernel)}, {"drift", to_json(path.truth->drift)}};
  write_json(sidecar_of(csv), side);
}

inline PathSample read_path(const std::filesystem::path& csv) {
  std::string header;
  const auto flat = config::read_two_column_csv(csv, header);
  if (header.rfind("t,x", 0) != 0) throw ConfigError("'" + csv.string() + "' must start with header t,x");
  PathSample path;
  for (std::size_t k = 0; k < flat.size(); k += 2) {
    path.times.push_back(flat[k]);
    path.values.push_back(flat[k + 1]);
  }
  if (path.values.size() < 2) throw ConfigError("'" + csv.string() + "' has fewer than two observations");
  const auto side = sidecar_of(csv);
  if (std::filesystem::exists(side)) {
    const auto j = config::load_file(side);
    path.h = j.at("h").get<double>();
    path.seed = j.value("seed", std::uint64_t{0});
  } else {
    path.h = (path.times.back() - path.times.front()) / static_cast<double>(path.values.size() - 1);
  }
  for (std::size_t i = 0; i < path.times.size(); ++i) {
    const double expected = path.times.front() + static_cast<double>(i) * path.h;
    if (std::abs(path.times[i] - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
      throw ConfigError("'" + csv.string() + "' is not on a uniform grid with step h = " + format_number(path.h));
    }
  }
  return path;
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const EstimateReport& r) {
  json est = json::array();
  for (const auto& e : r.estimates) {
    json item{{"name", e.name}, {"value", e.value}, {"rate", e.rate}};
    if (e.std_error) item["std_error"] = *e.std_error;
    est.push_back(item);
  }
  json diag{{"method", r.method}, {"iterations", r.iterations}, {"converged", r.converged}};
  if (std::isfinite(r.contrast_value)) diag["contrast_value"] = r.contrast_value;
  for (const auto& [k, v] : r.diagnostics) diag[k] = v;
  json j{{"estimates", est}, {"diagnostics", diag}};
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

inline json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline json to_json(const AsymptoticInfo& info) {
  json j{{"drift_block", matrix_json(info.drift_block)},
         {"V1", matrix_json(info.V1)},
         {"V2", matrix_json(info.V2)},
         {"sigma_names", info.sigma_names},
         {"v2_singular", info.v2_singular},
         {"rates", {{"drift", info.drift_rate}, {"sigma", info.sigma_rate}}}};
  if (info.sigma_block) j["sigma_block"] = matrix_json(*info.sigma_block);
  return j;
}

// ---------------------------------------------------------------------------
// Experiment outputs

inline void write_summary_csv(const std::filesystem::path& file, const SummaryTable& t) {
  auto out = open_out(file);
  out << "case,n,estimator,mean,sd,reps_ok,reps_failed,dri_tail\n";
  for (const auto& r : t.rows) {
    out << case_name(t.case_id) << ',' << r.n << ',' << r.estimator << ',' << format_number(r.mean) << ','
        << format_number(r.sd) << ',' << r.reps_ok << ',' << r.reps_failed << ',' << format_number(t.dri_tail.at(r.n))
        << '\n';
  }
  for (const auto& [name, value] : t.truth)
    out << case_name(t.case_id) << ",truth," << name << ',' << format_number(value) << ",0,0,0,0\n";
}

inline void write_records_csv(const std::filesystem::path& file, const std::vector<ReplicationRecord>& records) {
  auto out = open_out(file);
  out << "n,rep,seed,ok,xi,alpha,beta,error\n";
  for (const auto& r : records) {
    std::string err = r.error;
    for (auto& c : err)
      if (c == ',' || c == '\n') c = ' ';
    out << r.n << ',' << r.rep << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',' << format_number(r.xi) << ','
        << format_number(r.alpha) << ',' << format_number(r.beta) << ',' << err << '\n';
  }
}

inline void write_qq_csv(const std::filesystem::path& file, const std::vector<QQPoint>& points) {
  auto out = open_out(file);
  out << "theoretical,empirical\n";
  for (const auto& p : points) out << format_number(p.theoretical) << ',' << format_number(p.empirical) << '\n';
}

// ---------------------------------------------------------------------------
// Provenance

inline json library_versions() {
  return {{"hfgp", kVersion},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"boost", std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) + "." +
                        std::to_string(BOOST_VERSION % 100)},
          {"fftw", std::string(fftw_version)},
          {"compiler", __VERSION__}};
}

/// Hash of the effective configuration in canonical (sorted-key, compact) form.
inline std::string config_hash(const json& effective) { return hex64(fnv1a(effective.dump())); }

inline void write_manifest(const std::filesystem::path& dir, const std::string& subcommand, const json& effective,
                           std::uint64_t seed, const std::vector<std::string>& outputs) {
  json m{{"subcommand", subcommand},
         {"config", effective},
         {"config_hash", config_hash(effective)},
         {"seed", seed},
         {"outputs", outputs},
         {"versions", library_versions()}};
  write_json(dir / "manifest.json", m);
}

}  // namespace hfgp::io
