#include "test_support.hpp"

#include <sstream>

using namespace covrate;

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& csv) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Experiments, DefaultsAndNames) {
  EXPECT_EQ(experiment_names().size(), 6u);
  for (const std::string& n : experiment_names()) EXPECT_EQ(default_experiment(n).name, n);
  EXPECT_THROW(default_experiment("nope"), Error);
  EXPECT_THROW(default_experiment("local-max", "e"), Error);
  EXPECT_EQ(default_experiment("scaling-4").nodes.size(), 4u);
}

TEST(Experiments, PopulationIsByteIdenticalPerSeed) {
  ExperimentSpec s = default_experiment("global-max", "b");
  s.L = 20;
  const ExperimentOutput a = run_experiment(s), b = run_experiment(s);
  EXPECT_EQ(a.csv, b.csv);
  s.seed += 1;
  EXPECT_NE(run_experiment(s).csv, a.csv);
}

TEST(Experiments, PopulationCsvAndSummary) {
  ExperimentSpec s = default_experiment("local-max", "a");
  s.L = 30;
  const ExperimentOutput o = run_experiment(s);
  EXPECT_NE(o.csv.find("# experiment=local-max variant=a seed="), std::string::npos);
  EXPECT_NE(o.csv.find(std::string(kRngAlgorithm)), std::string::npos);
  const auto rows = csv_rows(o.csv);
  ASSERT_EQ(rows.size(), 32u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"trial", "snr_db", "is_optimal"}));
  EXPECT_EQ(rows[1][2], "1");
  const double opt = std::stod(rows[1][1]);
  for (std::size_t k = 2; k < rows.size(); ++k) EXPECT_LE(std::stod(rows[k][1]), opt);
  EXPECT_TRUE(o.summary.at("optimal_is_max").get<bool>());
  EXPECT_EQ(o.summary.at("seed").get<std::uint64_t>(), s.seed);
  EXPECT_EQ(o.summary.at("L").get<int>(), 30);
}

TEST(Experiments, HighRateAccuracySweep) {
  const ExperimentOutput o = run_experiment(default_experiment("highrate-accuracy"));
  const Json& sweep = o.summary.at("sweep");
  ASSERT_EQ(sweep.size(), 10u);
  EXPECT_DOUBLE_EQ(sweep[0].at("R_nats").get<double>(), 25.0);
  EXPECT_LE(sweep[0].at("relative_error").get<double>(), 0.02);
  for (std::size_t k = 1; k < sweep.size(); ++k)
    EXPECT_LE(sweep[k].at("rate_error_nats").get<double>(), sweep[k - 1].at("rate_error_nats").get<double>() + 1e-3);
  EXPECT_EQ(csv_rows(o.csv)[0], (std::vector<std::string>{"trial", "R_nats", "rate_error_nats", "is_optimal"}));
}

TEST(Experiments, ScalarSweepRegimeLabels) {
  const ExperimentOutput o = run_experiment(default_experiment("scalar-sweep"));
  const Json& d = o.summary.at("rates_detail");
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d[0].at("regime"), "Minimizer");
  EXPECT_EQ(d[1].at("regime"), "Boundary");
  EXPECT_EQ(d[2].at("regime"), "Maximizer");
  EXPECT_FALSE(d[1].at("stationary_feasible").get<bool>());
  // 1000 sweep rows per rate plus one stationary row for each feasible rate
  EXPECT_EQ(csv_rows(o.csv).size(), 1u + 3000u + 2u);
}

TEST(Experiments, McValidateSmallRun) {
  ExperimentSpec s = default_experiment("mc-validate");
  s.mc_models = 3;
  s.mc_samples = 20000;
  const ExperimentOutput o = run_experiment(s);
  EXPECT_EQ(o.summary.at("rdf_models").size(), 3u);
  EXPECT_EQ(csv_rows(o.csv).size(), 1u + 4u);
  EXPECT_LT(o.summary.at("snr").at("abs_diff_db").get<double>(), 0.5);
}

TEST(Experiments, ScalingFourBeatsTwoSensors) {
  ExperimentSpec s = default_experiment("scaling-4");
  s.L = 10;
  const ExperimentOutput o = run_experiment(s);
  EXPECT_GT(o.summary.at("optimal_snr_db").get<double>(), o.summary.at("two_sensor_optimal_snr_db").get<double>());
  EXPECT_TRUE(o.summary.at("rescale_intermediate").get<bool>());
}
