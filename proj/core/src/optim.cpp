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

#include "lika/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lika/error.hpp"

namespace lika {
namespace {

void require_epoch(int epoch, int total) {
  if (epoch < 0 || epoch > total) {
    throw UsageError("epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(total) + "]");
  }
}

double decay(double start, double t_end, int epoch, int total) {
  if (epoch == 0) return start;
  if (epoch == total) return t_end;
  const double log_gamma = std::log(t_end / start) / total;
  return start * std::exp(log_gamma * epoch);
}

double channel_at(const TemperatureChannel& ch, int epoch,
                  const TemperatureSchedule& sched) {
  if (ch.mode == TemperatureChannel::Mode::kFixed || ch.value <= 0.0) {
    return ch.value;
  }
  return decay(ch.value, sched.t_end, epoch, sched.total_epochs);
}

}  // namespace

void TemperatureSchedule::validate() const {
  if (!(t0 > t_end) || !(t_end > 0.0)) {
    throw UsageError("temperature schedule requires t0 > t_end > 0 (got t0=" +
                     std::to_string(t0) + ", t_end=" + std::to_string(t_end) +
                     ")");
  }
  if (total_epochs < 1) throw UsageError("temperature schedule: total_epochs < 1");
}

double TemperatureSchedule::at(int epoch) const {
  validate();
  require_epoch(epoch, total_epochs);
  return decay(t0, t_end, epoch, total_epochs);
}

TemperaturePair temperature_at(int epoch, const TemperatureSchedule& sched) {
  const double t = sched.at(epoch);
  return {t, t};
}

TemperaturePair temperatures_at(int epoch, const TemperatureSchedule& sched,
                                const AnnealPlan& plan) {
  require_epoch(epoch, sched.total_epochs);
  if (!(sched.t_end > 0.0)) throw UsageError("temperature schedule: t_end <= 0");
  return {channel_at(plan.t2, epoch, sched), channel_at(plan.t3, epoch, sched)};
}

double cosine_lr(int epoch, int total_epochs, double lr0, double lr_min) {
  if (total_epochs < 1) throw UsageError("cosine_lr: total_epochs < 1");
  require_epoch(epoch, total_epochs);
  if (lr0 < lr_min || lr_min < 0.0) {
    throw UsageError("cosine_lr requires lr0 >= lr_min >= 0");
  }
  if (epoch == total_epochs) return lr_min;
  const double phase = std::numbers::pi * epoch / total_epochs;
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw UsageError("adam_step: size mismatch");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw NumericError("adam_step: non-finite gradient at index " +
                         std::to_string(i));
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

GradCheckResult grad_check(const ScalarFn& f, std::span<const double> params,
                           std::span<const double> analytic, double rel_tol) {
  if (params.size() != analytic.size()) {
    throw UsageError("grad_check: size mismatch");
  }
  std::vector<double> p(params.begin(), params.end());
  const double f0 = f(p);
  const double floor = 1e-6 * (1.0 + std::abs(f0));

  GradCheckResult res;
  bool saw_nan = !std::isfinite(f0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    const double h = 1e-5 * std::max(1.0, std::abs(orig));
    p[i] = orig + h;
    const double fp = f(p);
    p[i] = orig - h;
    const double fm = f(p);
    p[i] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double a = analytic[i];
    const double denom = std::max({std::abs(a), std::abs(fd), floor});
    const double err = std::abs(a - fd) / denom;
    if (!std::isfinite(err)) {
      saw_nan = true;
      res.max_rel_error = std::numeric_limits<double>::infinity();
      res.worst_index = i;
      continue;
    }
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_index = i;
    }
  }
  res.passed = !saw_nan && res.max_rel_error <= rel_tol;
  return res;
}

}  // namespace lika
