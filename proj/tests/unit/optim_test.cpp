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

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "lika/error.hpp"

namespace lika {
namespace {

TEST(TemperatureSchedule, EndpointsAndMidpoint) {
  TemperatureSchedule s;
  s.total_epochs = 2000;
  EXPECT_EQ(temperature_at(0, s), (TemperaturePair{100.0, 100.0}));
  const TemperaturePair end = temperature_at(2000, s);
  EXPECT_NEAR(end.t2 / 1e-3, 1.0, 1e-12);
  EXPECT_NEAR(end.t3 / 1e-3, 1.0, 1e-12);
  EXPECT_NEAR(temperature_at(1000, s).t2, std::sqrt(100.0 * 1e-3), 1e-12);
}

TEST(TemperatureSchedule, StrictlyDecreasing) {
  TemperatureSchedule s;
  s.total_epochs = 500;
  double prev = s.at(0);
  for (int e = 1; e <= 500; ++e) {
    const double t = s.at(e);
    EXPECT_LT(t, prev) << e;
    prev = t;
  }
}

TEST(TemperatureSchedule, RejectsBadArguments) {
  TemperatureSchedule s;
  s.total_epochs = 10;
  EXPECT_THROW(s.at(-1), UsageError);
  EXPECT_THROW(s.at(11), UsageError);
  s.t_end = 200.0;
  EXPECT_THROW(s.validate(), UsageError);
  s.t_end = 0.0;
  EXPECT_THROW(s.validate(), UsageError);
}

TEST(AnnealPlan, PerTemperatureOverrides) {
  TemperatureSchedule s;
  s.total_epochs = 100;
  const AnnealPlan plan{TemperatureChannel::annealed(100.0), TemperatureChannel::fixed(0.0)};
  EXPECT_EQ(temperatures_at(0, s, plan), (TemperaturePair{100.0, 0.0}));
  EXPECT_EQ(temperatures_at(100, s, plan), (TemperaturePair{1e-3, 0.0}));
  EXPECT_EQ(temperatures_at(50, s, AnnealPlan::frozen(10.0, 10.0)),
            (TemperaturePair{10.0, 10.0}));
  EXPECT_EQ(temperatures_at(37, s, AnnealPlan::coupled(100.0)), temperature_at(37, s));
}

TEST(CosineLr, EndpointsAndMidpoint) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 100, 2e-4, 0.0), 2e-4);
  EXPECT_DOUBLE_EQ(cosine_lr(100, 100, 2e-4, 1e-6), 1e-6);
  EXPECT_NEAR(cosine_lr(50, 100, 2e-4, 1e-6), (2e-4 + 1e-6) / 2.0, 1e-18);
  EXPECT_THROW(cosine_lr(101, 100, 2e-4, 0.0), UsageError);
  EXPECT_THROW(cosine_lr(1, 100, 1e-5, 1e-4), UsageError);
}

TEST(CosineLr, MonotoneNonIncreasing) {
  double prev = cosine_lr(0, 777, 1e-3, 1e-5);
  for (int e = 1; e <= 777; ++e) {
    const double lr = cosine_lr(e, 777, 1e-3, 1e-5);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
}

TEST(AdamStep, ZeroGradientLeavesParamsUnchanged) {
  AdamState st(3);
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  adam_step(st, p, g, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(st.step, 1);
}

TEST(AdamStep, FirstAndSecondStep) {
  AdamState st(1);
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  adam_step(st, p, g, 0.1);
  EXPECT_LT(std::abs(p[0] + 0.1), 1e-6);
  adam_step(st, p, g, 0.1);
  EXPECT_NEAR(p[0], -0.2, 1e-4);
}

TEST(AdamStep, DeterministicAndRejectsNonFinite) {
  AdamState a(4), b(4);
  std::vector<double> pa{0.1, 0.2, 0.3, 0.4}, pb = pa;
  const std::vector<double> g{0.5, -1.5, 2.5, 1e-3};
  for (int i = 0; i < 10; ++i) {
    adam_step(a, pa, g, 1e-2);
    adam_step(b, pb, g, 1e-2);
  }
  EXPECT_EQ(pa, pb);
  EXPECT_EQ(a.m, b.m);
  EXPECT_EQ(a.v, b.v);

  std::vector<double> bad{0.0, NAN, 0.0, 0.0};
  const auto before = pa;
  EXPECT_THROW(adam_step(a, pa, bad, 1e-2), NumericError);
  EXPECT_EQ(pa, before);
}

TEST(ClipGradNorm, RescalesOnlyAboveThreshold) {
  std::vector<double> g{3.0, 4.0};
  EXPECT_DOUBLE_EQ(clip_grad_norm(g, 10.0), 5.0);
  EXPECT_EQ(g, (std::vector<double>{3.0, 4.0}));
  clip_grad_norm(g, 1.0);
  EXPECT_NEAR(std::hypot(g[0], g[1]), 1.0, 1e-15);
  std::vector<double> h{3.0, 4.0};
  clip_grad_norm(h, 0.0);
  EXPECT_EQ(h, (std::vector<double>{3.0, 4.0}));
}

TEST(GradCheck, Quadratic) {
  const std::vector<double> p{3.0};
  const std::vector<double> g{6.0};
  const auto r = grad_check([](std::span<const double> x) { return x[0] * x[0]; }, p, g, 1e-6);
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_rel_error, 1e-6);
}

TEST(GradCheck, LikaLossAtRandomPoints) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0), s(0.1, 3.0), t(0.0, 10.0);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> p{u(rng), s(rng)};
    if (std::abs(p[0]) < 1e-3 || std::abs(p[1] - std::abs(p[0])) < 1e-3) continue;
    const TemperaturePair temps{t(rng), t(rng)};
    const LossEval e = lika_loss(p[0], 0.0, p[1], temps);
    const std::vector<double> g{e.d_mean, e.d_sigma};
    const auto r = grad_check(
        [&](std::span<const double> x) { return lika_loss(x[0], 0.0, x[1], temps).value; }, p,
        g, 1e-5);
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(GradCheck, CorruptedGradientIsReported) {
  const std::vector<double> p{0.7, 1.3};
  const LossEval e = lika_loss(p[0], 0.0, p[1], {1.0, 1.0});
  const std::vector<double> g{e.d_mean + 0.1, e.d_sigma};
  const auto r = grad_check(
      [](std::span<const double> x) { return lika_loss(x[0], 0.0, x[1], {1.0, 1.0}).value; }, p,
      g, 1e-5);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 0.01);
  EXPECT_EQ(r.worst_index, 0u);
}

TEST(GradCheck, NanFails) {
  const std::vector<double> p{1.0};
  const std::vector<double> g{0.0};
  const auto r = grad_check([](std::span<const double>) { return NAN; }, p, g, 1.0);
  EXPECT_FALSE(r.passed);
}

}  // namespace
}  // namespace lika
