// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "covrate/covrate.hpp"

using namespace covrate;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << "failed: ";
      detail << what << "; ";
      pass = false;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double rel(const Matrix& a, const Matrix& b) { return (a - b).norm() / std::max(b.norm(), 1e-300); }

Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

// 1. Joint diagonalizer and matrix minimum properties.
void joint_diagonalizer_suite(Outcome& o) {
  Rng rng(101, 0);
  double worst = 0.0;
  int bad = 0;
  for (int t = 0; t < 500; ++t) {
    const Index n = 2 + t % 7;
    const Matrix s1 = random_spd(rng, n), s2 = random_spd(rng, n);
    const JointDiag jd = joint_diagonalize(SpdMatrix(s1), SpdMatrix(s2));
    const Matrix d1 = jd.V * s1 * jd.V.transpose(), d2 = jd.V * s2 * jd.V.transpose();
    const double e_diag = std::max(rel(d1, Matrix(jd.lambda.asDiagonal())), rel(d2, Matrix(jd.lambda_prime.asDiagonal())));
    const double e_det = std::abs(std::abs(jd.V.determinant()) - 1.0);
    bool ok = e_diag <= 1e-9 && e_det <= 1e-9;
    for (Index i = 1; i < n; ++i)
      ok = ok && jd.lambda(i - 1) >= jd.lambda(i) * (1 - 1e-9) && jd.lambda_prime(i - 1) >= jd.lambda_prime(i) * (1 - 1e-9);
    const Matrix m = matrix_min(SpdMatrix(s1), SpdMatrix(s2)).matrix();
    ok = ok && psd_leq(m, s1) && psd_leq(m, s2);
    // Ordered pair a ⪯ b: the minimum is a whichever way round the pair is given.
    const Matrix b = s1 + random_spd(rng, n, 0.01);
    const double e4 = std::max(rel(matrix_min(SpdMatrix(s1), SpdMatrix(b)).matrix(), s1),
                               rel(matrix_min(SpdMatrix(b), SpdMatrix(s1)).matrix(), s1));
    ok = ok && e4 <= 1e-9;
    worst = std::max({worst, e_diag, e_det, e4});
    if (!ok) ++bad;
  }
  o.require(bad == 0, std::to_string(bad) + " of 500 pairs");
  o.detail << "worst relative error " << worst;
}

// 2. Randomized determinant search never beats the matrix minimum and gets within 1%.
void determinant_oracle(Outcome& o) {
  Rng rng(102, 0);
  double worst_excess = -1.0, worst_ratio = 2.0;
  for (int t = 0; t < 50; ++t) {
    const Index n = t % 2 == 0 ? 2 : 3;
    const Matrix s1 = random_spd(rng, n), s2 = random_spd(rng, n);
    const double target = matrix_min(SpdMatrix(s1), SpdMatrix(s2)).matrix().determinant();
    const DetSearchResult r = constrained_det_search(SpdMatrix(s1), SpdMatrix(s2), 100000, 1000 + t);
    worst_excess = std::max(worst_excess, (r.search_best - target) / target);
    worst_ratio = std::min(worst_ratio, r.search_best / target);
  }
  o.require(worst_excess <= 1e-9, "search exceeded the minimum");
  o.require(worst_ratio >= 0.99, "search stayed below 99%");
  o.detail << "max relative excess " << worst_excess << ", min ratio " << worst_ratio;
}

// 3. Rate-distortion cross-checks.
void rdf_cross_checks(Outcome& o) {
  Rng rng(103, 0);
  double ea = 0.0, eb = 0.0, ec = 0.0, ed = 0.0;
  for (int t = 0; t < 100; ++t) {
    const ConditionalStats s = analyze(random_joint_model(rng, 1, 1, 1));
    const double hi = s.Sigma_x_given_z(0, 0), lo = s.Sigma_x_given_yz(0, 0);
    const double d = lo + rng.uniform(0.01, 1.2) * (hi - lo);
    const double closed = d >= hi ? 0.0 : 0.5 * std::log((hi - lo) / (d - lo));
    ea = std::max(ea, std::abs(rate_distortion(s, mat1(d)).rate - closed));
  }
  for (int t = 0; t < 100; ++t) {
    const Index nx = 2 + t % 3;
    const ConditionalStats s = analyze(random_joint_model(rng, nx, nx + 1, 2));
    const Matrix d = random_distortion(rng, s);
    eb = std::max(eb, std::abs(channel_mutual_info(s, test_channel(s, d)) - rate_distortion(s, d).rate));
  }
  for (int t = 0; t < 100; ++t) {
    const Index nx = 2 + t % 3;
    const ConditionalStats s = analyze(random_joint_model(rng, nx, nx, 1));
    const double lo = s.Sigma_x_given_yz.trace() / nx, hi = s.Sigma_x_given_z.trace() / nx;
    const WaterfillResult w = mse_rdf(s, lo + rng.uniform(0.05, 0.95) * (hi - lo));
    ec = std::max(ec, std::abs(rate_distortion(s, w.d_star).rate - w.rate));
    const RelayResult r = relay_solve(s, rng.uniform(0.05, 0.95) * relay_max_information(relay_mu(s)));
    ed = std::max(ed, std::abs(rate_distortion(s, r.d_star).rate - r.rate));
  }
  o.require(ea <= 1e-10, "(a) scalar");
  o.require(eb <= 1e-9, "(b) achievability");
  o.require(ec <= 1e-9, "(c) mse");
  o.require(ed <= 1e-9, "(d) relay");
  o.detail << "(a) " << ea << " (b) " << eb << " (c) " << ec << " (d) " << ed;
}

// 4. Monte Carlo validation of error covariance and fused SNR.
void monte_carlo(Outcome& o) {
  ExperimentSpec s = default_experiment("mc-validate");
  const ExperimentOutput out = run_experiment(s);
  double worst = 0.0;
  bool within = true;
  for (const Json& m : out.summary.at("rdf_models")) {
    worst = std::max(worst, m.at("rel_frobenius_dev").get<double>());
    within = within && m.at("within_distortion").get<bool>();
  }
  const double snr_diff = out.summary.at("snr").at("abs_diff_db").get<double>();
  o.require(out.summary.at("rdf_models").size() == 10, "expected 10 models");
  o.require(worst <= 0.05, "covariance deviation");
  o.require(within, "error covariance exceeds D + 5%");
  o.require(snr_diff <= 0.2, "SNR deviation");
  o.detail << "max covariance deviation " << worst << ", SNR diff " << snr_diff << " dB";
}

// 5. Scalar thresholds, regimes and sweep extrema.
void scalar_case(Outcome& o) {
  const auto net = [](double rate) {
    return FusionNetwork(mat1(1.0), {{mat1(1.0), mat1(0.2), 0.5}, {mat1(1.0), mat1(0.1), 0.5}}, rate);
  };
  const ScalarResult r05 = scalar_allocate(net(0.5)), r1 = scalar_allocate(net(1.0)), r2 = scalar_allocate(net(2.0));
  o.require(std::abs(r05.R_max - 1.13) <= 0.005, "R_max");
  o.require(std::abs(r05.R_min - 0.83) <= 0.005, "R_min");
  o.require(r05.regime == ScalarRegime::Minimizer && r1.regime == ScalarRegime::Boundary &&
                r2.regime == ScalarRegime::Maximizer,
            "regimes");
  // Sweep minimum sits at the stationary point for R = 0.5, maximum for R = 2.
  const auto near_d1 = [](const ScalarPoint& p, const ScalarResult& r) {
    return std::abs(std::log(p.D1 / r.D1_star)) < 0.02;
  };
  o.require(r05.stationary_feasible && near_d1(r05.sweep_worst, r05), "R=0.5 minimum");
  o.require(!r1.stationary_feasible, "R=1 stationary point should be infeasible");
  o.require(r2.stationary_feasible && near_d1(r2.sweep_best, r2), "R=2 maximum");
  o.require(r2.snr_star >= r2.sweep_best.snr * (1 - 1e-9), "R=2 stationary SNR below sweep");
  o.detail << "R_max " << r05.R_max << ", R_min " << r05.R_min;
}

// 6. High-rate allocation beats perturbed and random populations.
void populations(Outcome& o) {
  for (const char* name : {"local-max", "global-max"})
    for (const char* v : {"a", "b", "c", "d"}) {
      const ExperimentOutput out = run_experiment(default_experiment(name, v));
      const double gap = out.summary.at("gap_db").get<double>();
      o.require(out.summary.at("optimal_is_max").get<bool>(), std::string(name) + "-" + v);
      if (std::string(name) == "global-max") {
        o.require(gap > 0.0, std::string("gap ") + v);
        o.detail << v << " gap " << gap << " dB, ";
      }
    }
}

// 7. Four sensors beat two.
void scaling(Outcome& o) {
  ExperimentSpec s = default_experiment("scaling-4");
  s.L = 20;
  const ExperimentOutput out = run_experiment(s);
  const double four = out.summary.at("optimal_snr_db").get<double>();
  const double two = out.summary.at("two_sensor_optimal_snr_db").get<double>();
  o.require(four > two, "four-sensor SNR not higher");
  o.detail << "4 sensors " << four << " dB, 2 sensors " << two << " dB";
}

// 8. High-rate budget accuracy.
void highrate_accuracy(Outcome& o) {
  const ExperimentOutput out = run_experiment(default_experiment("highrate-accuracy"));
  const Json& sweep = out.summary.at("sweep");
  const double first = sweep[0].at("rate_error_nats").get<double>();
  o.require(sweep[0].at("R_nats").get<double>() == 25.0, "sweep must start at 25");
  o.require(first <= 0.02 * 25.0, "error at R=25");
  for (std::size_t k = 1; k < sweep.size(); ++k)
    o.require(sweep[k].at("rate_error_nats").get<double>() <= sweep[k - 1].at("rate_error_nats").get<double>() + 1e-3,
              "increase at R=" + std::to_string(sweep[k].at("R_nats").get<double>()));
  o.require(sweep.back().at("R_nats").get<double>() == 160.0, "sweep must end at 160");
  o.detail << "error at R=25 " << first << " nats";
}

// 9. Feasibility boundary of the high-rate allocator.
void feasibility_boundary(Outcome& o) {
  Rng rng(109, 0);
  int tested = 0, ok = 0;
  while (tested < 20) {
    std::vector<SensorNode> nodes;
    const Index n = 2 + tested % 3;
    for (int i = 0; i < 2; ++i) {
      const Matrix w = rng.normal_matrix(n, n) + 2.0 * Matrix::Identity(n, n);
      nodes.push_back({w, 0.05 * random_spd(rng, n), i == 0 ? 0.4 : 0.6});
    }
    const FusionNetwork probe(random_spd(rng, n), nodes, 1.0);
    const double r_min = highrate_min_rate(probe);
    if (!(r_min > 0.0)) continue;
    ++tested;
    bool above = true, below = false;
    try {
      highrate_allocate(probe.with_rate(1.01 * r_min));
    } catch (const Error&) {
      above = false;
    }
    try {
      highrate_allocate(probe.with_rate(0.99 * r_min));
    } catch (const Error& e) {
      below = e.kind() == ErrorKind::InfeasibleBudget;
    }
    if (above && below) ++ok;
  }
  o.require(ok == 20, std::to_string(20 - ok) + " networks misbehaved");
  o.detail << ok << "/20 networks";
}

// 10. KKT residuals.
void kkt(Outcome& o) {
  const FusionNetwork scalar(mat1(1.0), {{mat1(1.0), mat1(0.2), 0.5}, {mat1(1.0), mat1(0.1), 0.5}}, 2.0);
  const KktResiduals ks = kkt_residuals(scalar, scalar_kkt_state(scalar, scalar_allocate(scalar)));
  o.require(ks.coupling <= 1e-9 && ks.budget <= 1e-9, "scalar coupling/budget");
  double worst = std::max(ks.coupling, ks.budget);

  const ExperimentSpec spec = default_experiment("local-max", "a");
  double prev = std::numeric_limits<double>::infinity();
  for (double rate = 80.0; rate <= 320.0; rate += 40.0) {
    const FusionNetwork net = build_network(spec, rate);
    const HighRateResult r = highrate_allocate(net);
    const KktResiduals k = kkt_residuals(net, highrate_kkt_state(net, r));
    const double coupling = k.coupling / std::max(1.0, r.A.norm());
    o.require(coupling <= 1e-9 && k.budget_highrate <= 1e-9, "high-rate coupling/budget at R=" + std::to_string(rate));
    worst = std::max({worst, coupling, k.budget_highrate});
    const double stat = *std::max_element(k.stationarity.begin(), k.stationarity.end());
    o.require(stat <= prev + 1e-3, "stationarity grew at R=" + std::to_string(rate));
    o.detail << "R=" << rate << " stationarity " << stat << ", ";
    prev = stat;
  }
  o.detail << "max coupling/budget residual " << worst;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"joint diagonalizer properties on 500 random pairs", joint_diagonalizer_suite},
      {"determinant search against the matrix minimum", determinant_oracle},
      {"rate-distortion cross-checks", rdf_cross_checks},
      {"Monte Carlo error covariance and fused SNR", monte_carlo},
      {"scalar thresholds, regimes and sweep extrema", scalar_case},
      {"optimal allocation beats perturbed and random populations", populations},
      {"four-sensor network beats two-sensor network", scaling},
      {"high-rate budget accuracy", highrate_accuracy},
      {"high-rate feasibility boundary", feasibility_boundary},
      {"KKT residuals", kkt},
  };
  const double limits[] = {5, 60, 0, 120, 0, 300, 0, 0, 0, 0};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    if (limits[i] > 0) o.require(secs < limits[i], "runtime over " + std::to_string(limits[i]) + " s");
    if (!o.pass) ++failures;
    std::printf("%s %zu: %s (%.2f s) %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, secs,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
