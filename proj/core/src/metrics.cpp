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

#include "lika/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lika/error.hpp"

namespace lika {

EvalBatch::EvalBatch(Eigen::MatrixXd mean_, Eigen::MatrixXd sigma_,
                     Eigen::MatrixXd target_)
    : mean(std::move(mean_)), sigma(std::move(sigma_)), target(std::move(target_)) {
  validate();
}

EvalBatch::EvalBatch(std::span<const PredictiveDistribution> predictions,
                     const Eigen::MatrixXd& targets)
    : target(targets) {
  if (static_cast<Eigen::Index>(predictions.size()) != targets.rows()) {
    throw UsageError("EvalBatch: " + std::to_string(predictions.size()) +
                     " predictions for " + std::to_string(targets.rows()) +
                     " targets");
  }
  mean.resize(targets.rows(), targets.cols());
  sigma.resize(targets.rows(), targets.cols());
  for (Eigen::Index i = 0; i < targets.rows(); ++i) {
    const auto& p = predictions[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(p.mean.size()) != targets.cols() ||
        p.sigma.size() != p.mean.size()) {
      throw UsageError("EvalBatch: prediction width mismatch at row " +
                       std::to_string(i));
    }
    for (Eigen::Index c = 0; c < targets.cols(); ++c) {
      mean(i, c) = p.mean[static_cast<std::size_t>(c)];
      sigma(i, c) = p.sigma[static_cast<std::size_t>(c)];
    }
  }
  validate();
}

void EvalBatch::validate() const {
  if (mean.rows() != target.rows() || mean.cols() != target.cols() ||
      sigma.rows() != target.rows() || sigma.cols() != target.cols()) {
    throw UsageError("EvalBatch: shape mismatch");
  }
  if (!mean.allFinite() || !sigma.allFinite() || !target.allFinite()) {
    throw UsageError("EvalBatch: non-finite entries");
  }
}

std::vector<double> default_ece_levels() {
  std::vector<double> levels;
  for (int k = 0; k < 10; ++k) levels.push_back(0.05 + 0.1 * k);
  return levels;
}

namespace {

void require_non_empty(const EvalBatch& b, const char* what) {
  if (b.size() == 0) throw UsageError(std::string(what) + ": empty batch");
}

}  // namespace

RegressionMetrics regression_metrics(const EvalBatch& batch) {
  require_non_empty(batch, "regression_metrics");
  const Eigen::ArrayXXd diff = (batch.mean - batch.target).array();
  const double n = static_cast<double>(batch.size());
  RegressionMetrics out;
  out.mae = diff.abs().sum() / n;
  out.mse = diff.square().sum() / n;
  if (out.mse == 0.0) {
    out.psnr = kPsnrCap;
  } else {
    const double range = batch.target.maxCoeff() - batch.target.minCoeff();
    const double psnr = 10.0 * std::log10(range * range / out.mse);
    out.psnr = std::clamp(psnr, -kPsnrCap, kPsnrCap);
  }
  return out;
}

UceResult uce(const EvalBatch& batch, int m_bins) {
  if (m_bins < 1) throw UsageError("uce: m_bins must be >= 1");
  require_non_empty(batch, "uce");
  const Eigen::ArrayXXd var = batch.sigma.array().square();
  const Eigen::ArrayXXd err = (batch.mean - batch.target).array().square();
  const double lo = var.minCoeff();
  const double hi = var.maxCoeff();
  const double width = (hi - lo) / m_bins;

  UceResult out;
  out.bins.resize(static_cast<std::size_t>(m_bins));
  for (int m = 0; m < m_bins; ++m) {
    out.bins[m].lower = lo + width * m;
    out.bins[m].upper = m + 1 == m_bins ? hi : lo + width * (m + 1);
  }
  std::vector<double> err_sum(out.bins.size(), 0.0);
  std::vector<double> var_sum(out.bins.size(), 0.0);
  for (Eigen::Index k = 0; k < var.size(); ++k) {
    int m = 0;
    if (width > 0.0) {
      m = static_cast<int>(std::floor((var(k) - lo) / width));
      m = std::clamp(m, 0, m_bins - 1);
    }
    ++out.bins[m].count;
    err_sum[m] += err(k);
    var_sum[m] += var(k);
  }
  const double n = static_cast<double>(var.size());
  for (std::size_t m = 0; m < out.bins.size(); ++m) {
    auto& bin = out.bins[m];
    if (bin.count == 0) continue;
    const double c = static_cast<double>(bin.count);
    bin.err = err_sum[m] / c;
    bin.uncer = var_sum[m] / c;
    out.value += c / n * std::abs(bin.err - bin.uncer);
  }
  return out;
}

double ece(const EvalBatch& batch, std::span<const double> levels) {
  require_non_empty(batch, "ece");
  if (levels.empty()) throw UsageError("ece: no confidence levels");
  for (double p : levels) {
    if (!(p > 0.0 && p < 1.0)) throw UsageError("ece: levels must lie in (0, 1)");
  }
  // A target lies inside the central p-interval iff erf(|u| / (sigma sqrt 2)) <= p.
  const Eigen::Index n = batch.size();
  std::vector<double> q(static_cast<std::size_t>(n));
  const Eigen::ArrayXXd u = (batch.target - batch.mean).array().abs();
  for (Eigen::Index k = 0; k < n; ++k) {
    q[k] = std::erf(u(k) / (batch.sigma(k) * std::numbers::sqrt2));
  }
  std::sort(q.begin(), q.end());
  double total = 0.0;
  for (double p : levels) {
    const auto inside = std::upper_bound(q.begin(), q.end(), p) - q.begin();
    const double coverage = static_cast<double>(inside) / static_cast<double>(n);
    total += std::abs(coverage - p);
  }
  return 100.0 * total / static_cast<double>(levels.size());
}

double ece(const EvalBatch& batch) {
  const auto levels = default_ece_levels();
  return ece(batch, levels);
}

double sharpness(const EvalBatch& batch) {
  require_non_empty(batch, "sharpness");
  return batch.sigma.mean();
}

CorrResult corr_coeff(const EvalBatch& batch) {
  if (batch.size() < 2) throw UsageError("corr_coeff: need at least 2 cells");
  const Eigen::ArrayXXd var = batch.sigma.array().square();
  const Eigen::ArrayXXd err = (batch.mean - batch.target).array().square();
  const Eigen::ArrayXXd dv = var - var.mean();
  const Eigen::ArrayXXd de = err - err.mean();
  const double svv = dv.square().sum();
  const double see = de.square().sum();
  if (svv == 0.0 || see == 0.0) return {0.0, true};
  const double r = (dv * de).sum() / std::sqrt(svv * see);
  return {std::clamp(r, -1.0, 1.0), false};
}

double log_likelihood(const EvalBatch& batch) {
  require_non_empty(batch, "log_likelihood");
  const Eigen::ArrayXXd var = batch.sigma.array().square();
  const Eigen::ArrayXXd err = (batch.target - batch.mean).array().square();
  const double log2pi = std::log(2.0 * std::numbers::pi);
  return (-0.5 * (log2pi + var.log()) - err / (2.0 * var)).mean();
}

double sigma_scale(const EvalBatch& calibration) {
  require_non_empty(calibration, "sigma_scale");
  const Eigen::ArrayXXd z2 = ((calibration.mean - calibration.target).array() /
                              calibration.sigma.array())
                                 .square();
  return std::sqrt(z2.mean());
}

double sigma_scale_objective(const EvalBatch& calibration, double s) {
  const Eigen::ArrayXXd z2 = ((calibration.mean - calibration.target).array() /
                              calibration.sigma.array())
                                 .square();
  const double n = static_cast<double>(calibration.size());
  return n * std::log(s) + z2.sum() / (2.0 * s * s);
}

EvalBatch rescaled(const EvalBatch& batch, double s) {
  EvalBatch out = batch;
  out.sigma = (batch.sigma.array() * s).max(kSigmaFloor).matrix();
  return out;
}

double recalibrated_uce(const EvalBatch& test, double s_star, int m_bins) {
  if (s_star == 1.0) return uce(test, m_bins).value;
  return uce(rescaled(test, s_star), m_bins).value;
}

MetricsReport evaluate_all(const EvalBatch& test, const EvalBatch& calibration,
                           int m_bins) {
  test.validate();
  calibration.validate();
  MetricsReport r;
  const auto reg = regression_metrics(test);
  r.mae = reg.mae;
  r.mse = reg.mse;
  r.psnr = reg.psnr;
  r.corr_coeff = corr_coeff(test).value;
  r.uce = uce(test, m_bins).value;
  r.r_uce = recalibrated_uce(test, sigma_scale(calibration), m_bins);
  r.ece = ece(test);
  r.sharpness = sharpness(test);
  r.log_likelihood = log_likelihood(test);
  return r;
}

}  // namespace lika
