// Copyright 2026 The LIKA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lika/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "lika/error.hpp"

namespace lika {
namespace {

namespace fs = std::filesystem;

TrainConfig quick(Method m, int epochs = 8) {
  TrainConfig c;
  c.method = m;
  c.epochs = epochs;
  c.hidden_layers = {8, 8};
  c.ensemble_size = 2;
  c.mc_passes = 5;
  c.ttda_copies = 4;
  c.seed = 3;
  return c;
}

TrainingTrace mae_trace(const std::vector<double>& mae) {
  TrainingTrace t;
  for (std::size_t i = 0; i < mae.size(); ++i) {
    EpochRecord r;
    r.epoch = static_cast<int>(i) + 1;
    r.val_mae = mae[i];
    t.push_back(r);
  }
  return t;
}

TEST(Method, ParseAndNames) {
  for (const char* name : {"nll", "lika", "lika-norm", "lika-exact", "do-nll", "do-lika",
                           "ens-nll", "ens-lika", "ttda"}) {
    EXPECT_EQ(to_string(parse_method(name)), name);
  }
  try {
    parse_method("bayes");
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_NE(std::string(e.what()).find("ens-lika"), std::string::npos);
  }
  EXPECT_EQ(loss_for(Method::kEnsLika), LossKind::kLika);
  EXPECT_EQ(loss_for(Method::kTtda), LossKind::kNll);
}

TEST(TrainConfig, ValidationAndJsonRoundTrip) {
  TrainConfig c = quick(Method::kEnsNll);
  c.ensemble_size = 1;
  EXPECT_THROW(c.validate(), UsageError);
  c.ensemble_size = 3;
  c.prior = WeightPrior::kLaplace;
  c.schedule.t0 = 50.0;
  c.anneal = AnnealPlan{TemperatureChannel::fixed(4.0), TemperatureChannel::annealed(50.0)};
  const TrainConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_THROW(config_from_json(R"({"epochz": 3})"), UsageError);
  const TrainConfig partial = config_from_json(R"({"epochs": 11})", c);
  EXPECT_EQ(partial.epochs, 11);
  EXPECT_EQ(partial.ensemble_size, 3);
}

TEST(EpochsToConverge, RuleExamples) {
  std::vector<double> plateau;
  for (int e = 1; e <= 30; ++e) plateau.push_back(e < 10 ? 10.0 - e + 1.5 : 1.0);
  EXPECT_EQ(epochs_to_converge(mae_trace(plateau)), 10);
  EXPECT_EQ(epochs_to_converge(mae_trace(std::vector<double>(30, 2.0))), 1);
  std::vector<double> diverging;
  for (int e = 1; e <= 30; ++e) diverging.push_back(std::exp(e));
  EXPECT_EQ(epochs_to_converge(mae_trace(diverging)), 30);
  // A brief excursion out of the band resets the run.
  std::vector<double> blip(40, 1.0);
  blip[15] = 5.0;
  EXPECT_EQ(epochs_to_converge(mae_trace(blip)), 17);
  EXPECT_THROW(epochs_to_converge({}), UsageError);
}

TEST(RunExperiment, FiniteMetricsAndDeterminism) {
  const Dataset ds = generate_synthetic(300, 1);
  for (Method m : {Method::kNll, Method::kLika}) {
    const ExperimentReport a = run_experiment(ds, quick(m), "synth");
    const ExperimentReport b = run_experiment(ds, quick(m), "synth");
    EXPECT_EQ(a.trace.size(), 8u);
    for (double v : {a.metrics.mae, a.metrics.mse, a.metrics.psnr, a.metrics.corr_coeff,
                     a.metrics.uce, a.metrics.r_uce, a.metrics.ece, a.metrics.sharpness,
                     a.metrics.log_likelihood}) {
      EXPECT_TRUE(std::isfinite(v));
    }
    EXPECT_EQ(report_to_json(a), report_to_json(b));
    EXPECT_EQ(summary_csv_row(a), summary_csv_row(b));
  }
}

TEST(RunExperiment, EveryMethodRuns) {
  const Dataset ds = generate_synthetic(200, 2);
  for (Method m : {Method::kLikaNorm, Method::kLikaExact, Method::kDoNll, Method::kDoLika,
                   Method::kEnsNll, Method::kEnsLika, Method::kTtda}) {
    const ExperimentReport r = run_experiment(ds, quick(m, 4));
    EXPECT_EQ(r.trace.size(), 4u) << to_string(m);
    EXPECT_TRUE(std::isfinite(r.metrics.uce)) << to_string(m);
  }
}

TEST(FitMethod, EnsembleMembersUseDistinctSeeds) {
  const Dataset ds = generate_synthetic(200, 2);
  const FittedMethod f = fit_method(ds, quick(Method::kEnsNll, 3));
  ASSERT_EQ(f.members.size(), 2u);
  EXPECT_NE(f.members[0].values, f.members[1].values);
  TrainConfig single = quick(Method::kNll, 3);
  single.seed = 4;
  EXPECT_EQ(fit_method(ds, single).members[0].values, f.members[1].values);
}

TEST(Ablation, NineRowsInCanonicalOrder) {
  const auto rows = ablation_rows(quick(Method::kLika));
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0].label, "T2=0,T3=0");
  EXPECT_EQ(rows[6].label, "T2=100v,T3=100v");
  EXPECT_EQ(rows[7].config.prior, WeightPrior::kGaussian);
  EXPECT_EQ(rows[8].config.prior, WeightPrior::kLaplace);
  for (const auto& r : rows) EXPECT_EQ(r.config.method, Method::kLika);
}

TEST(Ablation, ZeroRowMatchesNllAndParallelismIsIrrelevant) {
  const Dataset ds = generate_synthetic(200, 5);
  const TrainConfig base = quick(Method::kLika, 5);
  const auto serial = ablation_grid(ds, base, 1);
  const auto parallel = ablation_grid(ds, base, 3);
  ASSERT_EQ(serial.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) {
    ASSERT_TRUE(serial[i].report.has_value()) << serial[i].error;
    EXPECT_EQ(report_to_json(*serial[i].report), report_to_json(*parallel[i].report));
  }
  const ExperimentReport nll = run_experiment(ds, quick(Method::kNll, 5));
  EXPECT_EQ(serial[0].report->metrics, nll.metrics);
  EXPECT_EQ(serial[0].report->trace, nll.trace);
}

TEST(OodSweep, ShapeAndCleanLevel) {
  const Dataset ds = generate_synthetic(200, 6);
  const std::vector<TrainConfig> configs{quick(Method::kNll, 4), quick(Method::kLika, 4)};
  const auto cells = ood_sweep(ds, configs, {1, 2, 3}, 2);
  ASSERT_EQ(cells.size(), 6u);
  EXPECT_EQ(cells[0].level, NoiseLevel::kNL0);
  EXPECT_EQ(cells[2].level, NoiseLevel::kNL2);
  EXPECT_EQ(cells[3].method, Method::kLika);
  TrainConfig c = configs[1];
  c.seed = 2;
  const ExperimentReport clean = run_experiment(ds, c);
  EXPECT_EQ(cells[3].mae[1], clean.metrics.mae);
  EXPECT_EQ(cells[3].uce[1], clean.metrics.uce);
  EXPECT_EQ(cells[3].median_mae, median(cells[3].mae));
  EXPECT_EQ(ood_sweep(ds, configs, {1, 2, 3}, 1)[4].mae, cells[4].mae);
}

TEST(ParallelMap, ResultsKeyedByIndex) {
  const auto out = parallel_map<int>(50, 4, [](std::size_t i) { return static_cast<int>(i * i); });
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
  EXPECT_DOUBLE_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}

TEST(ReportIo, JsonRoundTripAndCsvShape) {
  const Dataset ds = generate_synthetic(200, 7);
  const ExperimentReport r = run_experiment(ds, quick(Method::kLika, 3), "synth");
  const ExperimentReport back = report_from_json(report_to_json(r));
  EXPECT_EQ(back.metrics, r.metrics);
  EXPECT_EQ(back.trace, r.trace);
  EXPECT_EQ(back.dataset, r.dataset);
  EXPECT_EQ(back.epochs_to_converge, r.epochs_to_converge);
  EXPECT_EQ(report_to_json(back), report_to_json(r));
  const auto count = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
  EXPECT_EQ(count(summary_csv_header()), 12);
  EXPECT_EQ(count(summary_csv_row(r)), 12);
  const std::string trace = trace_csv(r.trace);
  EXPECT_EQ(trace.substr(0, trace.find('\n')),
            "epoch,lr,t2,t3,train_loss,val_loss,val_mae,val_uce,val_ece");

  const fs::path dir = fs::temp_directory_path() / "lika_harness_io";
  fs::remove_all(dir);
  write_run(r, dir);
  EXPECT_TRUE(fs::exists(dir / "trace.csv"));
  EXPECT_EQ(read_text(dir / "report.json"), report_to_json(r));
  fs::remove_all(dir);
  EXPECT_THROW(write_text("/proc/lika/not/here.txt", "x"), DataError);
}

}  // namespace
}  // namespace lika
