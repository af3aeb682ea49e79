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

#include <span>
#include <vector>

#include <Eigen/Core>

#include "lika/types.hpp"

namespace lika {

/// Predictions and targets for N samples with n output coordinates each.
/// All three matrices are N x n. Metrics treat every (sample, coordinate)
/// cell as one observation.
struct EvalBatch {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd target;

  EvalBatch() = default;
  EvalBatch(Eigen::MatrixXd mean, Eigen::MatrixXd sigma, Eigen::MatrixXd target);
  EvalBatch(std::span<const PredictiveDistribution> predictions,
            const Eigen::MatrixXd& targets);

  Eigen::Index size() const { return mean.size(); }
  /// Throws UsageError on shape mismatch or non-finite entries.
  void validate() const;
};

struct RegressionMetrics {
  double mae = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
};

struct BinStats {
  std::size_t count = 0;
  double err = 0.0;     // mean squared error of the bin
  double uncer = 0.0;   // mean predicted variance of the bin
  double lower = 0.0;   // variance interval [lower, upper)
  double upper = 0.0;
};

struct UceResult {
  double value = 0.0;
  std::vector<BinStats> bins;
};

struct CorrResult {
  double value = 0.0;
  bool degenerate = false;
};

struct MetricsReport {
  double mae = 0.0;
  double mse = 0.0;
  double psnr = 0.0;
  double corr_coeff = 0.0;
  double uce = 0.0;
  double r_uce = 0.0;
  double ece = 0.0;
  double sharpness = 0.0;
  double log_likelihood = 0.0;

  friend bool operator==(const MetricsReport&, const MetricsReport&) = default;
};

inline constexpr int kDefaultUceBins = 10;
inline constexpr double kPsnrCap = 100.0;

/// {0.05, 0.15, ..., 0.95}.
std::vector<double> default_ece_levels();

/// MAE and MSE over all cells. PSNR = 10 log10(range^2 / MSE) with range the
/// spread of the batch targets, clamped to [-kPsnrCap, kPsnrCap].
RegressionMetrics regression_metrics(const EvalBatch& batch);

/// Predicted variances are split into m_bins equal-width bins spanning
/// [min, max] of the batch; UCE is the count-weighted |err - uncer|.
UceResult uce(const EvalBatch& batch, int m_bins = kDefaultUceBins);

/// 100 * mean over levels p of |coverage(p) - p|, where coverage(p) is the
/// fraction of targets inside the central p-interval of N(mean, sigma^2).
double ece(const EvalBatch& batch, std::span<const double> levels);
double ece(const EvalBatch& batch);

/// Mean predicted sigma.
double sharpness(const EvalBatch& batch);

/// Pearson correlation between sigma^2 and squared error. Zero with the
/// degenerate flag set when either series is constant.
CorrResult corr_coeff(const EvalBatch& batch);

/// Mean Gaussian log density of the targets, constants included.
double log_likelihood(const EvalBatch& batch);

/// Closed-form minimizer of N log s + (1 / 2 s^2) sum u_i^2 / sigma_i^2,
/// i.e. s* = sqrt(mean(u^2 / sigma^2)).
double sigma_scale(const EvalBatch& calibration);

/// Objective minimized by sigma_scale; exposed for oracle checks.
double sigma_scale_objective(const EvalBatch& calibration, double s);

/// The batch with every sigma multiplied by s (variances by s^2), floored.
EvalBatch rescaled(const EvalBatch& batch, double s);

/// UCE after replacing sigma^2 with s_star^2 sigma^2.
double recalibrated_uce(const EvalBatch& test, double s_star,
                        int m_bins = kDefaultUceBins);

/// Every metric on `test`; the recalibration factor is fit on `calibration`.
MetricsReport evaluate_all(const EvalBatch& test, const EvalBatch& calibration,
                           int m_bins = kDefaultUceBins);

}  // namespace lika
