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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "lika/data.hpp"
#include "lika/error.hpp"
#include "lika/losses.hpp"
#include "lika/optim.hpp"
#include "lika/types.hpp"

namespace lika {

enum class Activation { kTanh, kRelu };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view name);

/// Fully connected network with a mean head and a raw-sigma head.
struct ModelSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden_layers{64, 64};
  Activation activation = Activation::kTanh;
  double dropout_rate = 0.0;

  void validate() const;
  std::size_t parameter_count() const;
  int head_width() const { return 2 * output_dim; }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Affine maps applied before the network (inputs) and after it (targets).
/// Empty vectors mean identity. Losses are evaluated in the standardized
/// target space.
struct Standardizer {
  Eigen::VectorXd input_shift;
  Eigen::VectorXd input_scale;
  Eigen::VectorXd target_shift;
  Eigen::VectorXd target_scale;

  bool identity() const { return input_shift.size() == 0; }
  Eigen::MatrixXd scale_inputs(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd scale_targets(const Eigen::MatrixXd& y) const;

  /// Fit on the train rows of `ds`; zero-variance columns keep scale 1.
  static Standardizer fit(const Dataset& ds);
};

/// Flat parameter vector. Layer l stores its weight matrix (out x in,
/// column-major) followed by its bias vector; the last layer's first
/// output_dim rows feed the mean head, the rest the sigma head.
struct ModelParams {
  std::vector<double> values;
  Standardizer scaler;
};

/// Predictions for N samples: both matrices N x output_dim.
struct BatchPrediction {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd sigma;

  std::vector<PredictiveDistribution> to_distributions() const;
};

ModelParams init_model(const ModelSpec& spec, std::uint64_t seed);

/// sigma = softplus(raw) + kSigmaFloor in standardized units.
PredictiveDistribution predict(const ModelParams& params, const ModelSpec& spec,
                               std::span<const double> x);
/// Rows of `x` are samples.
BatchPrediction predict_batch(const ModelParams& params, const ModelSpec& spec,
                              const Eigen::MatrixXd& x);
std::vector<PredictiveDistribution> predict(const ModelParams& params,
                                            const ModelSpec& spec,
                                            const Eigen::MatrixXd& x);

// --- Baseline wrappers ----------------------------------------------------

/// Mean of member means; variance is the mean of member variances.
BatchPrediction ensemble_predict(std::span<const ModelParams> members,
                                 const ModelSpec& spec, const Eigen::MatrixXd& x);
PredictiveDistribution ensemble_predict(std::span<const ModelParams> members,
                                        const ModelSpec& spec,
                                        std::span<const double> x);

/// n_passes stochastic forward passes with dropout active; mean of means and
/// mean of variances. With dropout_rate == 0 this is predict().
BatchPrediction mc_dropout_predict(const ModelParams& params, const ModelSpec& spec,
                                   const Eigen::MatrixXd& x, int n_passes,
                                   std::uint64_t seed);
PredictiveDistribution mc_dropout_predict(const ModelParams& params,
                                          const ModelSpec& spec,
                                          std::span<const double> x, int n_passes,
                                          std::uint64_t seed);

/// Test-time augmentation: x plus n_aug copies perturbed by N(0, aug_sigma_j^2)
/// per input feature. Mean of the copies' means; sigma^2 is their sample
/// variance (floored).
BatchPrediction ttda_predict(const ModelParams& params, const ModelSpec& spec,
                             const Eigen::MatrixXd& x, int n_aug,
                             const Eigen::VectorXd& aug_sigma, std::uint64_t seed);
PredictiveDistribution ttda_predict(const ModelParams& params, const ModelSpec& spec,
                                    std::span<const double> x, int n_aug,
                                    double aug_sigma, std::uint64_t seed);

// --- Training -------------------------------------------------------------

enum class WeightPrior { kUniform, kGaussian, kLaplace };

std::string_view to_string(WeightPrior p);
WeightPrior parse_weight_prior(std::string_view name);

struct TrainOptions {
  LossKind loss = LossKind::kLika;
  int epochs = 2000;
  int batch_size = 64;
  double lr0 = 2e-4;
  double lr_min = 0.0;
  /// total_epochs is overwritten with `epochs`.
  TemperatureSchedule schedule{};
  AnnealPlan anneal = AnnealPlan::coupled(100.0);
  std::uint64_t seed = 0;
  WeightPrior prior = WeightPrior::kUniform;
  double prior_lambda = 1e-5;
  double clip_norm = 0.0;  // <= 0 disables
  bool standardize = true;
  int uce_bins = 10;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double t2 = 0.0;
  double t3 = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_mae = 0.0;
  double val_uce = 0.0;
  double val_ece = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

using TrainingTrace = std::vector<EpochRecord>;

struct TrainResult {
  ModelParams params;
  TrainingTrace trace;
};

/// Raised when training hits a non-finite loss or gradient; carries the
/// records of all completed epochs.
class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, TrainingTrace partial)
      : NumericError(what), trace_(std::move(partial)) {}
  const TrainingTrace& trace() const { return trace_; }

 private:
  TrainingTrace trace_;
};

/// Mini-batch Adam with cosine learning-rate decay and annealed temperatures.
/// Epoch e (1-based) trains with lr = cosine_lr(e - 1) and temperatures at
/// e - 1. The nll loss records zero temperatures. Dropout is active during
/// training when spec.dropout_rate > 0; validation uses deterministic passes.
TrainResult train(const ModelSpec& spec, const Dataset& dataset,
                  const TrainOptions& options);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean per-cell loss over the rows of (x, y) plus the weight-prior penalty,
/// and its gradient w.r.t. params.values. Inputs and targets are in raw units
/// and go through params.scaler. No dropout.
LossAndGrad loss_and_gradient(const ModelParams& params, const ModelSpec& spec,
                              LossKind loss, TemperaturePair temps,
                              const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                              WeightPrior prior = WeightPrior::kUniform,
                              double prior_lambda = 0.0);

// --- Checkpoints ----------------------------------------------------------

/// JSON record {format, version, spec, scaler, params}; doubles are written
/// in shortest round-trip form.
void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                     const ModelParams& params);
std::pair<ModelSpec, ModelParams> load_checkpoint(const std::filesystem::path& path);

}  // namespace lika
