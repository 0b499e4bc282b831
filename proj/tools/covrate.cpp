#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "covrate/covrate.hpp"

namespace {

using namespace covrate;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  bool bits = false;
};

double rate_unit(const Globals& g, double nats) { return g.bits ? nats / std::log(2.0) : nats; }
const char* unit_name(const Globals& g) { return g.bits ? "bits" : "nats"; }

/// A distortion file is either a matrix object or {"D": matrix}.
Matrix read_distortion(const std::string& path) {
  const Json j = read_json_file(path);
  if (j.is_object() && j.contains("D") && j.at("D").is_object()) return matrix_from_json(j.at("D"), "D");
  return matrix_from_json(j, "D");
}

void emit(const Globals& g, const std::string& name, const Json& result) {
  const std::string text = dump_json(result) + "\n";
  std::cout << text;
  if (!g.out.empty()) {
    std::filesystem::create_directories(g.out);
    write_text_file((std::filesystem::path(g.out) / (name + ".json")).string(), text);
  }
}

Json allocation_summary(const FusionNetwork& net, const Allocation& a) {
  const Snr snr = output_snr(net, a);
  return {{"snr_linear", snr.linear}, {"snr_db", snr.db}, {"weighted_sum_rate", weighted_sum_rate(net, a)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote Gaussian rate-distortion and sensor fusion toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Seed for randomized commands");
  app.add_option("--out", g.out, "Directory for result files");
  app.add_flag("--bits", g.bits, "Report rates in bits instead of nats");

  std::string model_path, dist_path, net_path, alloc_path;
  double d_scalar = 0.0, r_info = 0.0;

  auto* rdf = app.add_subcommand("rdf", "Rate-distortion function under a matrix distortion constraint");
  rdf->add_option("--model", model_path)->required();
  rdf->add_option("--distortion", dist_path)->required();

  auto* channel = app.add_subcommand("channel", "Achieving Gaussian test channel and MMSE decoder");
  channel->add_option("--model", model_path)->required();
  channel->add_option("--distortion", dist_path)->required();

  auto* mse = app.add_subcommand("mse", "Rate under a mean-squared-error constraint");
  mse->add_option("--model", model_path)->required();
  mse->add_option("--D", d_scalar, "Per-component MSE target")->required();

  auto* relay = app.add_subcommand("relay", "Rate needed for a relay information target");
  relay->add_option("--model", model_path)->required();
  relay->add_option("--RI", r_info, "Information rate target in nats")->required();

  auto* fsnr = app.add_subcommand("fusion-snr", "Output SNR of a distortion allocation");
  fsnr->add_option("--network", net_path)->required();
  fsnr->add_option("--allocation", alloc_path)->required();

  auto* ahr = app.add_subcommand("allocate-highrate", "High-rate optimal distortion allocation");
  ahr->add_option("--network", net_path)->required();

  auto* asc = app.add_subcommand("allocate-scalar", "Two-node scalar allocation and regime");
  asc->add_option("--network", net_path)->required();
  bool with_sweep = false;
  asc->add_flag("--sweep", with_sweep, "Include the constraint sweep in the output");

  auto* exp = app.add_subcommand("experiment", "Run a named experiment, writing CSV and JSON summary");
  std::string exp_name, variant = "a";
  std::int64_t trials = 0;
  Index samples = 0;
  exp->add_option("name", exp_name)->required()->check(CLI::IsMember(experiment_names()));
  exp->add_option("--variant", variant, "Noise setup a, b, c or d")->check(CLI::IsMember({"a", "b", "c", "d"}));
  exp->add_option("--L", trials, "Population size");
  exp->add_option("--samples", samples, "Monte Carlo sample count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  if (*seed_opt) g.seed = seed_value;

  try {
    if (*rdf) {
      const JointGaussianModel m = model_from_json(read_json_file(model_path));
      const RdfResult r = rate_distortion(analyze(m), read_distortion(dist_path));
      emit(g, "rdf",
           {{"rate", rate_unit(g, r.rate)},
            {"units", unit_name(g)},
            {"min_matrix", matrix_to_json(r.min_matrix)},
            {"error_cov", matrix_to_json(r.error_cov)}});
    } else if (*channel) {
      const JointGaussianModel m = model_from_json(read_json_file(model_path));
      const ConditionalStats s = analyze(m);
      const Matrix d = read_distortion(dist_path);
      const TestChannel tc = test_channel(s, d);
      const MmseDecoder dec = mmse_decoder(m, tc);
      Json active = Json::array();
      for (Index i : tc.active) active.push_back(i);
      emit(g, "channel",
           {{"rate", rate_unit(g, rate_distortion(s, d).rate)},
            {"mutual_information", rate_unit(g, channel_mutual_info(s, tc))},
            {"units", unit_name(g)},
            {"active", active},
            {"encoder_map", matrix_to_json(tc.encoder_map)},
            {"noise_cov", matrix_to_json(tc.noise_cov)},
            {"decoder_C", matrix_to_json(dec.C)},
            {"decoder_G", matrix_to_json(dec.G)},
            {"error_cov", matrix_to_json(dec.error_cov)}});
    } else if (*mse) {
      const WaterfillResult r = mse_rdf(analyze(model_from_json(read_json_file(model_path))), d_scalar);
      emit(g, "mse",
           {{"rate", rate_unit(g, r.rate)},
            {"units", unit_name(g)},
            {"water_level", r.water_level},
            {"lambda", vector_to_json(r.lambda)},
            {"d_star", matrix_to_json(r.d_star)}});
    } else if (*relay) {
      const RelayResult r = relay_solve(analyze(model_from_json(read_json_file(model_path))), r_info);
      emit(g, "relay",
           {{"rate", rate_unit(g, r.rate)},
            {"units", unit_name(g)},
            {"gamma", r.gamma},
            {"mu", vector_to_json(r.mu)},
            {"d_star", matrix_to_json(r.d_star)}});
    } else if (*fsnr) {
      const FusionNetwork net = network_from_json(read_json_file(net_path));
      const Allocation a = allocation_from_json(read_json_file(alloc_path));
      validate_allocation(net, a);
      Json j = allocation_summary(net, a);
      j["weighted_sum_rate"] = rate_unit(g, j["weighted_sum_rate"].get<double>());
      j["units"] = unit_name(g);
      j["analog_snr_db"] = analog_snr(net).db;
      emit(g, "fusion-snr", j);
    } else if (*ahr) {
      const FusionNetwork net = network_from_json(read_json_file(net_path));
      const HighRateResult r = highrate_allocate(net);
      const KktResiduals k = kkt_residuals(net, highrate_kkt_state(net, r));
      Json j = {{"valid", r.valid},
                {"lambda", r.lambda},
                {"R_min", rate_unit(g, r.R_min)},
                {"units", unit_name(g)},
                {"allocation", allocation_to_json(r.alloc)},
                {"kkt", {{"coupling", k.coupling}, {"budget_highrate", k.budget_highrate}}}};
      if (r.valid) {
        j["achieved_rate"] = rate_unit(g, r.achieved_rate);
        j["rate_deviation"] = rate_unit(g, r.rate_deviation);
        j["snr_db"] = output_snr(net, r.alloc).db;
      }
      emit(g, "allocate-highrate", j);
    } else if (*asc) {
      const FusionNetwork net = network_from_json(read_json_file(net_path));
      const ScalarResult r = scalar_allocate(net);
      auto point = [](const ScalarPoint& p) {
        return Json{{"D1", p.D1}, {"D2", p.D2}, {"snr_db", 10.0 * std::log10(p.snr)}};
      };
      Json j = {{"regime", std::string(to_string(r.regime))},
                {"R_max", rate_unit(g, r.R_max)},
                {"R_min", rate_unit(g, r.R_min)},
                {"units", unit_name(g)},
                {"D1_star", r.D1_star},
                {"D2_star", r.D2_star},
                {"stationary_feasible", r.stationary_feasible},
                {"sweep_best", point(r.sweep_best)},
                {"sweep_worst", point(r.sweep_worst)}};
      if (r.stationary_feasible) j["snr_star_db"] = 10.0 * std::log10(r.snr_star);
      if (with_sweep) {
        Json sweep = Json::array();
        for (const ScalarPoint& p : r.sweep) sweep.push_back(point(p));
        j["sweep"] = sweep;
      }
      emit(g, "allocate-scalar", j);
    } else if (*exp) {
      ExperimentSpec spec = default_experiment(exp_name, variant);
      if (g.seed) spec.seed = *g.seed;
      if (trials > 0) spec.L = trials;
      if (samples > 0) spec.mc_samples = samples;
      const ExperimentOutput o = run_experiment(spec);
      const std::string dir = g.out.empty() ? "." : g.out;
      std::filesystem::create_directories(dir);
      std::string stem = spec.name;
      if (spec.name == "local-max" || spec.name == "global-max") stem += "-" + spec.variant;
      write_text_file((std::filesystem::path(dir) / (stem + ".csv")).string(), o.csv);
      const std::string text = dump_json(o.summary) + "\n";
      write_text_file((std::filesystem::path(dir) / (stem + ".json")).string(), text);
      std::cout << text;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_infeasibility(e.kind()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
