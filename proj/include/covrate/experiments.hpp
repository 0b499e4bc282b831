#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "covrate/json_io.hpp"
#include "covrate/sim.hpp"

namespace covrate {

struct NodeType {
  double nu = 0.01;
  double rho = 0.0;
  double alpha = 0.5;
};

struct ExperimentSpec {
  std::string name;
  std::string variant = "a";
  Index n = 32;
  double R = 80.0;
  std::vector<NodeType> nodes;
  std::int64_t L = 1000;
  double beta_w = 0.999;
  double eta_w = 0.001;
  std::uint64_t seed = 20240501;
  std::vector<double> rates;
  Index mc_samples = 100000;
  int mc_models = 10;
  bool rescale_intermediate = false;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"local-max",         "global-max",    "scaling-4",
                                              "highrate-accuracy", "scalar-sweep",  "mc-validate"};
  return names;
}

/// Two-sensor noise setups a–d used by the population experiments.
inline std::vector<NodeType> two_sensor_setup(const std::string& variant) {
  if (variant == "a") return {{0.01, 0.9, 0.5}, {0.02, 0.3, 0.5}};
  if (variant == "b") return {{0.01, 0.0, 0.5}, {0.02, 0.0, 0.5}};
  if (variant == "c") return {{0.01, 0.9, 0.7}, {0.02, 0.3, 0.3}};
  if (variant == "d") return {{0.01, 0.9, 0.3}, {0.02, 0.3, 0.7}};
  throw Error(ErrorKind::InvalidParam, "unknown variant '" + variant + "' (expected a, b, c or d)");
}

inline ExperimentSpec default_experiment(const std::string& name, const std::string& variant = "a") {
  ExperimentSpec s;
  s.name = name;
  s.variant = variant;
  if (name == "local-max") {
    s.nodes = two_sensor_setup(variant);
  } else if (name == "global-max") {
    s.nodes = two_sensor_setup(variant);
    s.beta_w = 0.0;
    s.eta_w = 1.0;
  } else if (name == "scaling-4") {
    s.variant = "a";
    s.nodes = {{0.01, 0.9, 0.25}, {0.01, 0.9, 0.25}, {0.02, 0.3, 0.25}, {0.02, 0.3, 0.25}};
    s.beta_w = 0.0;
    s.eta_w = 1.0;
    s.rescale_intermediate = true;
  } else if (name == "highrate-accuracy") {
    s.nodes = {{0.1, 0.8, 0.5}, {0.2, 0.8, 0.5}};
    s.rates = {25, 30, 40, 50, 60, 80, 100, 120, 140, 160};
  } else if (name == "scalar-sweep") {
    s.n = 1;
    s.nodes = {{0.2, 0.0, 0.5}, {0.1, 0.0, 0.5}};
    s.rates = {0.5, 1.0, 2.0};
  } else if (name == "mc-validate") {
    s.nodes = two_sensor_setup("a");
  } else {
    throw Error(ErrorKind::InvalidParam, "unknown experiment '" + name + "'");
  }
  return s;
}

/// W = I sensors observing x_d with Σ_xd(i,j) = 0.9^{|i−j|}, or unit variance when n = 1.
inline FusionNetwork build_network(const ExperimentSpec& s, double rate) {
  std::vector<SensorNode> nodes;
  for (const NodeType& t : s.nodes)
    nodes.push_back({Matrix::Identity(s.n, s.n), exp_cov(s.n, t.nu, t.rho).matrix(), t.alpha});
  return FusionNetwork(exp_cov(s.n, 1.0, 0.9).matrix(), std::move(nodes), rate);
}

struct ExperimentOutput {
  std::string csv;
  Json summary;
};

inline bool is_population_experiment(const std::string& name) {
  return name == "local-max" || name == "global-max" || name == "scaling-4";
}

namespace detail {

inline Json spec_to_json(const ExperimentSpec& s) {
  Json nodes = Json::array();
  for (const NodeType& t : s.nodes) nodes.push_back({{"nu", t.nu}, {"rho", t.rho}, {"alpha", t.alpha}});
  Json j = {{"experiment", s.name}, {"n", s.n}, {"nodes", nodes}, {"seed", s.seed}, {"rng", kRngAlgorithm}};
  if (s.rates.empty()) j["R_nats"] = s.R;
  if (is_population_experiment(s.name)) {
    j["variant"] = s.variant;
    j["L"] = s.L;
    j["beta"] = s.beta_w;
    j["eta"] = s.eta_w;
    j["rescale_intermediate"] = s.rescale_intermediate;
  }
  if (!s.rates.empty()) j["rates"] = s.rates;
  if (s.name == "mc-validate") {
    j["samples"] = s.mc_samples;
    j["models"] = s.mc_models;
  }
  return j;
}

inline std::string csv_header(const ExperimentSpec& s) {
  std::string h = "# experiment=" + s.name;
  if (is_population_experiment(s.name)) h += " variant=" + s.variant;
  h += " seed=" + std::to_string(s.seed) + " rng=" + std::string(kRngAlgorithm) + "\n";
  h += "# params=" + covrate::dump_json(spec_to_json(s), -1) + "\n";
  return h;
}

struct PopulationStats {
  double max = 0.0, min = 0.0, mean = 0.0;
};

inline PopulationStats population_stats(const std::vector<double>& v) {
  PopulationStats p;
  p.max = *std::max_element(v.begin(), v.end());
  p.min = *std::min_element(v.begin(), v.end());
  p.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  return p;
}

inline HighRateResult require_valid_highrate(const FusionNetwork& net) {
  HighRateResult hr = highrate_allocate(net);
  if (!hr.valid)
    throw Error(ErrorKind::AssumptionViolated, "high-rate allocation is not a valid set of distortion matrices at R=" +
                                                   format_real(net.R()));
  return hr;
}

inline ExperimentOutput run_population(const ExperimentSpec& s) {
  const FusionNetwork net = build_network(s, s.R);
  const HighRateResult hr = require_valid_highrate(net);
  const double opt = output_snr(net, hr.alloc).db;
  const std::vector<double> bw(net.size(), s.beta_w), ew(net.size(), s.eta_w);
  const std::vector<Allocation> pop = random_valid_allocations(net, hr.alloc, bw, ew, s.L, s.seed, {.rescale_intermediate = s.rescale_intermediate});
  std::vector<double> snr(pop.size());
  parallel_for(pop.size(), [&](std::size_t j) { snr[j] = output_snr(net, pop[j]).db; });

  ExperimentOutput out;
  out.csv = csv_header(s) + "trial,snr_db,is_optimal\n0," + format_real(opt) + ",1\n";
  for (std::size_t j = 0; j < snr.size(); ++j)
    out.csv += std::to_string(j + 1) + "," + format_real(snr[j]) + ",0\n";

  const PopulationStats ps = population_stats(snr);
  out.summary = spec_to_json(s);
  out.summary["optimal_snr_db"] = opt;
  out.summary["population"] = {{"max_snr_db", ps.max}, {"min_snr_db", ps.min}, {"mean_snr_db", ps.mean}};
  out.summary["gap_db"] = opt - ps.max;
  out.summary["optimal_is_max"] = opt >= ps.max;
  out.summary["lambda"] = hr.lambda;
  out.summary["achieved_rate_nats"] = hr.achieved_rate;
  out.summary["analog_snr_db"] = analog_snr(net).db;
  if (s.name == "scaling-4") {
    ExperimentSpec two = default_experiment("global-max", "a");
    two.n = s.n;
    two.R = s.R;
    const FusionNetwork net2 = build_network(two, two.R);
    out.summary["two_sensor_optimal_snr_db"] = output_snr(net2, require_valid_highrate(net2).alloc).db;
  }
  return out;
}

inline ExperimentOutput run_highrate_accuracy(const ExperimentSpec& s) {
  ExperimentOutput out;
  out.csv = csv_header(s) + "trial,R_nats,rate_error_nats,is_optimal\n";
  Json rows = Json::array();
  for (std::size_t k = 0; k < s.rates.size(); ++k) {
    const double r = s.rates[k];
    const FusionNetwork net = build_network(s, r);
    const HighRateResult hr = highrate_allocate(net);
    const double err = hr.valid ? std::abs(hr.rate_deviation) : std::numeric_limits<double>::quiet_NaN();
    out.csv += std::to_string(k) + "," + format_real(r) + "," + format_real(err) + "," + (hr.valid ? "1" : "0") + "\n";
    rows.push_back({{"R_nats", r},
                    {"valid", hr.valid},
                    {"rate_error_nats", err},
                    {"relative_error", err / r},
                    {"exact_inversion_valid", hr.exact_inversion_valid},
                    {"exact_inversion_rate_error_nats", std::abs(hr.exact_inversion_rate_deviation)},
                    {"R_min_nats", hr.R_min}});
  }
  out.summary = spec_to_json(s);
  out.summary["sweep"] = rows;
  return out;
}

inline ExperimentOutput run_scalar_sweep(const ExperimentSpec& s) {
  ExperimentOutput out;
  out.csv = csv_header(s) + "trial,R_nats,D1,D2,snr_db,is_optimal\n";
  Json rows = Json::array();
  std::size_t trial = 0;
  for (double r : s.rates) {
    const FusionNetwork net = build_network(s, r);
    const ScalarResult sr = scalar_allocate(net);
    if (sr.stationary_feasible)
      out.csv += std::to_string(trial++) + "," + format_real(r) + "," + format_real(sr.D1_star) + "," +
                 format_real(sr.D2_star) + "," + format_real(10.0 * std::log10(sr.snr_star)) + ",1\n";
    for (const ScalarPoint& p : sr.sweep)
      out.csv += std::to_string(trial++) + "," + format_real(r) + "," + format_real(p.D1) + "," + format_real(p.D2) +
                 "," + format_real(10.0 * std::log10(p.snr)) + ",0\n";
    auto point = [](const ScalarPoint& p) {
      return Json{{"D1", p.D1}, {"D2", p.D2}, {"snr_db", 10.0 * std::log10(p.snr)}};
    };
    Json row = {{"R_nats", r},
                {"regime", std::string(to_string(sr.regime))},
                {"R_max", sr.R_max},
                {"R_min", sr.R_min},
                {"D1_star", sr.D1_star},
                {"D2_star", sr.D2_star},
                {"stationary_feasible", sr.stationary_feasible},
                {"sweep_best", point(sr.sweep_best)},
                {"sweep_worst", point(sr.sweep_worst)}};
    if (sr.stationary_feasible) row["snr_star_db"] = 10.0 * std::log10(sr.snr_star);
    rows.push_back(row);
  }
  out.summary = spec_to_json(s);
  out.summary["rates_detail"] = rows;
  return out;
}

inline ExperimentOutput run_mc_validate(const ExperimentSpec& s) {
  ExperimentOutput out;
  out.csv = csv_header(s) + "trial,kind,deviation,pass\n";
  Json models = Json::array();
  const RngStream root{s.seed, 0};
  std::vector<RdfMonteCarloReport> reports(static_cast<std::size_t>(s.mc_models));
  std::vector<Json> descr(reports.size());
  for (std::size_t k = 0; k < reports.size(); ++k) {
    Rng rng(root.child(k));
    const Index nx = 1 + static_cast<Index>(rng.next_u64() % 4);
    const Index ny = nx + static_cast<Index>(rng.next_u64() % 2);
    const Index nz = static_cast<Index>(rng.next_u64() % 3);
    const JointGaussianModel m = random_joint_model(rng, nx, ny, nz);
    const Matrix d = random_distortion(rng, analyze(m));
    reports[k] = mc_validate_rdf(m, d, s.mc_samples, root.child(1000 + k));
    descr[k] = {{"n_x", nx}, {"n_y", ny}, {"n_z", nz}};
  }
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const bool pass = reports[k].rel_frobenius_dev <= 0.05 && reports[k].within_distortion;
    out.csv += std::to_string(k) + ",rdf," + format_real(reports[k].rel_frobenius_dev) + "," + (pass ? "1" : "0") + "\n";
    Json j = descr[k];
    j["rel_frobenius_dev"] = reports[k].rel_frobenius_dev;
    j["within_distortion"] = reports[k].within_distortion;
    models.push_back(j);
  }
  const FusionNetwork net = build_network(s, s.R);
  const HighRateResult hr = require_valid_highrate(net);
  const SnrMonteCarloReport snr = mc_validate_snr(net, hr.alloc, s.mc_samples, root.child(2000));
  const double dev = std::abs(snr.empirical.db - snr.analytic.db);
  out.csv += std::to_string(reports.size()) + ",snr," + format_real(dev) + "," + (dev <= 0.2 ? "1" : "0") + "\n";
  out.summary = spec_to_json(s);
  out.summary["rdf_models"] = models;
  out.summary["snr"] = {{"empirical_db", snr.empirical.db},
                        {"analytic_db", snr.analytic.db},
                        {"abs_diff_db", dev},
                        {"distortionless_error", snr.max_distortionless_error}};
  return out;
}

}  // namespace detail

/// Runs a named experiment. Output is a deterministic function of its settings.
inline ExperimentOutput run_experiment(const ExperimentSpec& s) {
  if (is_population_experiment(s.name)) return detail::run_population(s);
  if (s.name == "highrate-accuracy") return detail::run_highrate_accuracy(s);
  if (s.name == "scalar-sweep") return detail::run_scalar_sweep(s);
  if (s.name == "mc-validate") return detail::run_mc_validate(s);
  throw Error(ErrorKind::InvalidParam, "unknown experiment '" + s.name + "'");
}

}  // namespace covrate
