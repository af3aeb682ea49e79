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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lika/losses.hpp"

namespace lika {

enum class DecayLaw { kExponential };

/// Exponential decay T(e) = t0 * gamma^e with gamma chosen so that
/// T(total_epochs) == t_end.
struct TemperatureSchedule {
  double t0 = 100.0;
  double t_end = 1e-3;
  int total_epochs = 2000;
  DecayLaw law = DecayLaw::kExponential;

  /// Throws UsageError unless t0 > t_end > 0 and total_epochs >= 1.
  void validate() const;
  double at(int epoch) const;
};

/// T2 and T3 both follow `sched`.
TemperaturePair temperature_at(int epoch, const TemperatureSchedule& sched);

/// One temperature channel: either follows the shared schedule (with its own
/// starting value) or is held fixed.
struct TemperatureChannel {
  enum class Mode { kAnnealed, kFixed };
  Mode mode = Mode::kAnnealed;
  double value = 100.0;  // start value when annealed, constant when fixed

  static TemperatureChannel annealed(double t0) { return {Mode::kAnnealed, t0}; }
  static TemperatureChannel fixed(double v) { return {Mode::kFixed, v}; }
};

/// Per-temperature override of the coupled schedule. An annealed channel
/// decays from its own value to sched.t_end at the shared rate horizon; a
/// channel fixed at zero contributes nothing.
struct AnnealPlan {
  TemperatureChannel t2;
  TemperatureChannel t3;

  static AnnealPlan coupled(double t0) {
    return {TemperatureChannel::annealed(t0), TemperatureChannel::annealed(t0)};
  }
  static AnnealPlan frozen(double t2, double t3) {
    return {TemperatureChannel::fixed(t2), TemperatureChannel::fixed(t3)};
  }
};

TemperaturePair temperatures_at(int epoch, const TemperatureSchedule& sched,
                                const AnnealPlan& plan);

/// lr = lr_min + 0.5 (lr0 - lr_min)(1 + cos(pi epoch / total_epochs)).
double cosine_lr(int epoch, int total_epochs, double lr0, double lr_min = 0.0);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// In-place bias-corrected Adam update. Throws NumericError on a non-finite
/// gradient (params are left untouched in that case).
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads, double lr);

/// Rescales `grads` so that its l2 norm is at most `max_norm`. Returns the
/// norm before clipping. max_norm <= 0 disables clipping.
double clip_grad_norm(std::span<double> grads, double max_norm);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  bool passed = false;
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// Compares `analytic` against central differences of `f` at `params` with
/// per-coordinate step h = 1e-5 * max(1, |p_i|). Relative error per
/// coordinate is |a - fd| / max(|a|, |fd|, 1e-6 (1 + |f(p)|)); the floor
/// absorbs round-off on near-zero components. NaN anywhere fails the check.
GradCheckResult grad_check(const ScalarFn& f, std::span<const double> params,
                           std::span<const double> analytic, double rel_tol);

}  // namespace lika
