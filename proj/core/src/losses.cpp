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

#include "lika/losses.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lika/error.hpp"

namespace lika {
namespace {

void require_finite(double y_hat, double y, double sigma) {
  if (!std::isfinite(y_hat) || !std::isfinite(y) || !std::isfinite(sigma)) {
    throw NumericError("loss: non-finite input (y_hat=" + std::to_string(y_hat) +
                       ", y=" + std::to_string(y) +
                       ", sigma=" + std::to_string(sigma) + ")");
  }
}

void require_floor(double sigma) {
  if (sigma < kSigmaFloor) {
    throw UsageError("loss: sigma " + std::to_string(sigma) +
                     " is below the floor " + std::to_string(kSigmaFloor));
  }
}

double sign_or_zero(double u) { return u > 0.0 ? 1.0 : (u < 0.0 ? -1.0 : 0.0); }

// log(1 + erf(a)) for a >= 0; switches to erfc once erf(a) rounds to 1.
double log1p_erf(double a) {
  if (a > 6.0) return std::numbers::ln2 + std::log1p(-0.5 * std::erfc(a));
  return std::log1p(std::erf(a));
}

double d_log1p_erf(double a) {
  const double dens = 2.0 / std::sqrt(std::numbers::pi) * std::exp(-a * a);
  return dens / (1.0 + std::erf(a));
}

// Pieces of the closed-form normalizer shared by the two normalized losses.
// With s2 = sigma^2, tt = t2 + t3:
//   x = s2 t3 (2 s2 t2 + 1) / (2 s2 tt + 1)   (the exponent)
//   r = sqrt(4 s2 tt + 2)
//   a = 2 s2 t3 / r                          (the erf argument)
// Derivatives are taken w.r.t. sigma.
struct NormTerms {
  double x, dx;
  double log_erf_term, d_log_erf_term;
  double log_r, d_log_r;
};

NormTerms norm_terms(double sigma, TemperaturePair t) {
  const double s2 = sigma * sigma;
  const double tt = t.t2 + t.t3;
  const double den = 2.0 * s2 * tt + 1.0;
  const double num = s2 * t.t3 * (2.0 * s2 * t.t2 + 1.0);
  const double dnum_ds2 = t.t3 * (4.0 * s2 * t.t2 + 1.0);
  const double dden_ds2 = 2.0 * tt;
  const double dx_ds2 = (dnum_ds2 * den - num * dden_ds2) / (den * den);

  const double r2 = 4.0 * s2 * tt + 2.0;
  const double r = std::sqrt(r2);
  const double a = 2.0 * s2 * t.t3 / r;
  const double da_ds2 = 2.0 * t.t3 / r - 4.0 * t.t3 * s2 * tt / (r2 * r);
  const double dlogr_ds2 = 2.0 * tt / r2;

  const double ds2 = 2.0 * sigma;
  NormTerms out;
  out.x = num / den;
  out.dx = dx_ds2 * ds2;
  out.log_erf_term = log1p_erf(a);
  out.d_log_erf_term = d_log1p_erf(a) * da_ds2 * ds2;
  out.log_r = 0.5 * std::log(r2);
  out.d_log_r = dlogr_ds2 * ds2;
  return out;
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::kNll: return "nll";
    case LossKind::kLika: return "lika";
    case LossKind::kLikaNorm: return "lika-norm";
    case LossKind::kLikaExact: return "lika-exact";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "nll") return LossKind::kNll;
  if (name == "lika") return LossKind::kLika;
  if (name == "lika-norm") return LossKind::kLikaNorm;
  if (name == "lika-exact") return LossKind::kLikaExact;
  throw UsageError("unknown loss '" + std::string(name) +
                   "' (allowed: nll, lika, lika-norm, lika-exact)");
}

LossEval gaussian_nll(double y_hat, double y, double sigma) {
  require_finite(y_hat, y, sigma);
  require_floor(sigma);
  const double u = y_hat - y;
  const double inv_s2 = 1.0 / (sigma * sigma);
  LossEval out;
  out.value = std::log(sigma) + 0.5 * u * u * inv_s2;
  out.d_mean = u * inv_s2;
  out.d_sigma = 1.0 / sigma - u * u * inv_s2 / sigma;
  return out;
}

LossEval lika_reg(double y_hat, double y, double sigma, TemperaturePair temps) {
  require_finite(y_hat, y, sigma);
  if (sigma < 0.0) throw UsageError("lika_reg: negative sigma");
  const double u = y_hat - y;
  const double gap = sigma - std::abs(u);
  LossEval out;
  out.value = temps.t2 * u * u + temps.t3 * gap * gap;
  out.d_mean = 2.0 * temps.t2 * u - 2.0 * temps.t3 * gap * sign_or_zero(u);
  out.d_sigma = 2.0 * temps.t3 * gap;
  return out;
}

LossEval lika_loss(double y_hat, double y, double sigma, TemperaturePair temps) {
  const LossEval nll = gaussian_nll(y_hat, y, sigma);
  const LossEval reg = lika_reg(y_hat, y, sigma, temps);
  return {nll.value + reg.value, nll.d_mean + reg.d_mean,
          nll.d_sigma + reg.d_sigma};
}

LossEval lika_loss_piecewise(double y_hat, double y, double sigma,
                             TemperaturePair temps) {
  LossEval out = gaussian_nll(y_hat, y, sigma);
  const double u = y_hat - y;
  out.value += temps.t2 * u * u;
  out.d_mean += 2.0 * temps.t2 * u;
  if (y_hat >= y) {
    const double d = y_hat - (y + sigma);
    out.value += temps.t3 * d * d;
    out.d_mean += 2.0 * temps.t3 * d;
    out.d_sigma -= 2.0 * temps.t3 * d;
  } else {
    const double d = y_hat - (y - sigma);
    out.value += temps.t3 * d * d;
    out.d_mean += 2.0 * temps.t3 * d;
    out.d_sigma += 2.0 * temps.t3 * d;
  }
  return out;
}

double log_norm_constant(double sigma, TemperaturePair temps) {
  require_finite(0.0, 0.0, sigma);
  require_floor(sigma);
  const NormTerms n = norm_terms(sigma, temps);
  return std::log(2.0 * std::sqrt(std::numbers::pi) * sigma) - n.x +
         n.log_erf_term - n.log_r;
}

double norm_constant(double sigma, TemperaturePair temps) {
  return std::exp(log_norm_constant(sigma, temps));
}

LossEval lika_norm_loss(double y_hat, double y, double sigma,
                        TemperaturePair temps) {
  require_finite(y_hat, y, sigma);
  require_floor(sigma);
  const double u = y_hat - y;
  const double s2 = sigma * sigma;
  const NormTerms n = norm_terms(sigma, temps);
  const LossEval reg = lika_reg(y_hat, y, sigma, temps);

  LossEval out;
  out.value = -n.x + n.log_erf_term - 0.5 * std::log(s2) + 0.5 * u * u / s2 +
              reg.value;
  out.d_mean = u / s2 + reg.d_mean;
  out.d_sigma = -n.dx + n.d_log_erf_term - 1.0 / sigma - u * u / (s2 * sigma) +
                reg.d_sigma;
  return out;
}

LossEval exact_norm_nll(double y_hat, double y, double sigma,
                        TemperaturePair temps) {
  require_finite(y_hat, y, sigma);
  require_floor(sigma);
  const double u = y_hat - y;
  const double s2 = sigma * sigma;
  const NormTerms n = norm_terms(sigma, temps);
  const LossEval reg = lika_reg(y_hat, y, sigma, temps);

  const double log_z = std::log(2.0 * std::sqrt(std::numbers::pi) * sigma) -
                       n.x + n.log_erf_term - n.log_r;
  const double d_log_z = 1.0 / sigma - n.dx + n.d_log_erf_term - n.d_log_r;

  LossEval out;
  out.value = log_z + 0.5 * u * u / s2 + reg.value;
  out.d_mean = u / s2 + reg.d_mean;
  out.d_sigma = d_log_z - u * u / (s2 * sigma) + reg.d_sigma;
  return out;
}

LossEval evaluate_loss(LossKind kind, double y_hat, double y, double sigma,
                       TemperaturePair temps) {
  switch (kind) {
    case LossKind::kNll: return gaussian_nll(y_hat, y, sigma);
    case LossKind::kLika: return lika_loss(y_hat, y, sigma, temps);
    case LossKind::kLikaNorm: return lika_norm_loss(y_hat, y, sigma, temps);
    case LossKind::kLikaExact: return exact_norm_nll(y_hat, y, sigma, temps);
  }
  throw UsageError("evaluate_loss: unknown loss kind");
}

}  // namespace lika
