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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lika/data.hpp"
#include "lika/metrics.hpp"
#include "lika/model.hpp"

namespace lika {

enum class Method {
  kNll,
  kLika,
  kLikaNorm,
  kLikaExact,
  kDoNll,
  kDoLika,
  kEnsNll,
  kEnsLika,
  kTtda,
};

std::string_view to_string(Method m);
Method parse_method(std::string_view name);
/// "nll, lika, ..." for error messages.
std::string method_names();
LossKind loss_for(Method m);

struct TrainConfig {
  Method method = Method::kLika;
  int epochs = 2000;
  int batch_size = 64;
  double lr0 = 2e-4;
  double lr_min = 0.0;
  TemperatureSchedule schedule{};
  /// Per-temperature override; defaults to both annealed from schedule.t0.
  std::optional<AnnealPlan> anneal;
  std::uint64_t seed = 0;
  int ensemble_size = 5;
  double dropout_rate = 0.1;  // used by do-* only
  WeightPrior prior = WeightPrior::kUniform;
  double prior_lambda = 1e-5;
  std::vector<int> hidden_layers{64, 64};
  Activation activation = Activation::kTanh;
  int bins = kDefaultUceBins;
  int mc_passes = 100;
  int ttda_copies = 32;
  double ttda_fraction = 0.1;  // aug sigma as a fraction of train input std
  double clip_norm = 0.0;
  bool standardize = true;

  /// Throws UsageError on inconsistent values.
  void validate() const;
  AnnealPlan effective_anneal() const;
};

/// kebab-case JSON object with every TrainConfig field.
std::string config_to_json(const TrainConfig& cfg);
/// Missing keys keep the values already in `base`; unknown keys are errors.
TrainConfig config_from_json(std::string_view json, TrainConfig base = {});

struct ExperimentReport {
  std::string dataset;
  TrainConfig config;
  MetricsReport metrics;
  TrainingTrace trace;
  int epochs_to_converge = 0;
  double wall_seconds = 0.0;  // not serialized; keeps report.json reproducible
};

/// A trained method: one member, or several for ensembles.
struct FittedMethod {
  TrainConfig config;
  ModelSpec spec;
  std::vector<ModelParams> members;
  TrainingTrace trace;
  Eigen::VectorXd ttda_sigma;  // per-feature augmentation sigma
};

FittedMethod fit_method(const Dataset& dataset, const TrainConfig& config);

/// Predictions of the fitted method on rows of `inputs` (raw units).
BatchPrediction predict_method(const FittedMethod& fitted, const Eigen::MatrixXd& inputs);

/// Metrics on the test split with the sigma-scaling factor fit on validation.
MetricsReport evaluate_method(const FittedMethod& fitted, const Dataset& dataset);

/// Trains per method, evaluates on test, fits s* on validation.
ExperimentReport run_experiment(const Dataset& dataset, const TrainConfig& config,
                                std::string dataset_name = "dataset");

/// First 1-based epoch whose validation MAE is within (1 + rel_delta) * best
/// and stays within it for `patience` epochs (or until the trace ends).
/// Returns the trace length when no epoch qualifies.
int epochs_to_converge(const TrainingTrace& trace, double rel_delta = 0.10,
                       int patience = 20);

struct AblationRow {
  std::string label;
  TrainConfig config;
  std::optional<ExperimentReport> report;
  std::string error;  // set when the row failed
};

/// The nine temperature/prior configurations in their canonical order.
std::vector<AblationRow> ablation_rows(const TrainConfig& base);
std::vector<AblationRow> ablation_grid(const Dataset& dataset, const TrainConfig& base,
                                       int threads = 1);

struct OodCell {
  Method method;
  NoiseLevel level;
  double median_mae = 0.0;
  double median_uce = 0.0;
  std::vector<double> mae;  // per seed, in seed order
  std::vector<double> uce;
};

/// Trains each (config, seed) on clean data and evaluates on corrupted test
/// inputs at NL0, NL1, NL2. One cell per (config, level), configs in input
/// order, levels ascending.
std::vector<OodCell> ood_sweep(const Dataset& dataset, const std::vector<TrainConfig>& configs,
                               const std::vector<std::uint64_t>& seeds, int threads = 1);

/// Runs `count` independent jobs on up to `threads` workers; results are
/// stored by job index, so output does not depend on scheduling.
template <typename T, typename Fn>
std::vector<T> parallel_map(std::size_t count, int threads, Fn fn);

double median(std::vector<double> values);

// --- Report I/O -----------------------------------------------------------

/// Fixed column order shared by summary.csv rows and report JSON.
inline constexpr const char* kSummaryColumns[] = {
    "method", "dataset", "seed", "mae", "mse", "psnr", "corr_coeff",
    "uce", "r_uce", "ece", "sharpness", "log_likelihood"};

std::string summary_csv_header();
std::string summary_csv_row(const ExperimentReport& r);
std::string trace_csv(const TrainingTrace& trace);
std::string report_to_json(const ExperimentReport& r);
ExperimentReport report_from_json(std::string_view json);

/// Writes trace.csv and report.json into `dir`.
void write_run(const ExperimentReport& r, const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lika

#include "lika/detail/parallel.hpp"
