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

#include <string_view>

namespace lika {

/// Lower bound on every predicted standard deviation.
inline constexpr double kSigmaFloor = 1e-6;

/// Per-sample loss value with its partials w.r.t. the mean and sigma heads.
struct LossEval {
  double value = 0.0;
  double d_mean = 0.0;
  double d_sigma = 0.0;
};

/// Weights of the residual (t2) and calibration (t3) regularizer terms.
struct TemperaturePair {
  double t2 = 0.0;
  double t3 = 0.0;

  friend bool operator==(const TemperaturePair&, const TemperaturePair&) = default;
};

enum class LossKind { kNll, kLika, kLikaNorm, kLikaExact };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

/// Heteroscedastic Gaussian NLL without the additive constant:
/// 0.5*log(sigma^2) + (y_hat - y)^2 / (2 sigma^2).
LossEval gaussian_nll(double y_hat, double y, double sigma);

/// Temperature regularizer t2*u^2 + t3*(sigma - |u|)^2 with u = y_hat - y.
/// Accepts sigma == 0. The subgradient of |u| at u == 0 is taken as 0.
LossEval lika_reg(double y_hat, double y, double sigma, TemperaturePair temps);

/// gaussian_nll + lika_reg.
LossEval lika_loss(double y_hat, double y, double sigma, TemperaturePair temps);

/// Same objective written with the two-branch calibration term
/// (y_hat >= y uses (u - sigma)^2, otherwise (u + sigma)^2). Used to check
/// that the branch form and the |u| form agree.
LossEval lika_loss_piecewise(double y_hat, double y, double sigma,
                             TemperaturePair temps);

/// Integral over u of exp(-(1/(2 sigma^2) + t2) u^2 - t3 (|u| - sigma)^2),
/// evaluated in closed form through erf.
double norm_constant(double sigma, TemperaturePair temps);
double log_norm_constant(double sigma, TemperaturePair temps);

/// The normalized objective in the closed form as it is usually printed,
/// including its -0.5*log(sigma^2) term. It is not the exact negative log of
/// the normalized density; see exact_norm_nll for that.
LossEval lika_norm_loss(double y_hat, double y, double sigma,
                        TemperaturePair temps);

/// Exact negative log density of the annealed likelihood normalized to unit
/// mass over the residual: log Z + (1/(2 sigma^2) + t2) u^2 + t3 (|u| - sigma)^2.
LossEval exact_norm_nll(double y_hat, double y, double sigma,
                        TemperaturePair temps);

/// Dispatch on the loss kind. kNll ignores the temperatures.
LossEval evaluate_loss(LossKind kind, double y_hat, double y, double sigma,
                       TemperaturePair temps);

}  // namespace lika
