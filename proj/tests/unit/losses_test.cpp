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
#include <functional>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "lika/error.hpp"
#include "oracles.hpp"

namespace lika {
namespace {

using testing::central_diff;
using testing::integrate_real_line;

using LossFn = LossEval (*)(double, double, double, TemperaturePair);

LossEval nll_adapter(double y_hat, double y, double sigma, TemperaturePair) {
  return gaussian_nll(y_hat, y, sigma);
}

struct NamedLoss {
  const char* name;
  LossFn fn;
};

const NamedLoss kLosses[] = {
    {"nll", nll_adapter},
    {"reg", lika_reg},
    {"lika", lika_loss},
    {"piecewise", lika_loss_piecewise},
    {"norm", lika_norm_loss},
    {"exact", exact_norm_nll},
};

// Unnormalized density of the annealed likelihood over the residual.
double density(double u, double sigma, TemperaturePair t) {
  const double a = std::abs(u) - sigma;
  return std::exp(-(0.5 / (sigma * sigma) + t.t2) * u * u - t.t3 * a * a);
}

double reach(double sigma, TemperaturePair t) {
  const double a = 0.5 / (sigma * sigma) + t.t2 + t.t3;
  return t.t3 * sigma / a + 40.0 / std::sqrt(2.0 * a);
}

TEST(GaussianNll, WorkedValues) {
  EXPECT_DOUBLE_EQ(gaussian_nll(0.0, 0.0, 1.0).value, 0.0);
  EXPECT_DOUBLE_EQ(gaussian_nll(1.0, 0.0, 1.0).value, 0.5);
  EXPECT_NEAR(gaussian_nll(2.0, 0.0, 2.0).value, std::numbers::ln2 + 0.5, 1e-15);
  EXPECT_NEAR(gaussian_nll(2.0, 0.0, 2.0).value, 1.19315, 1e-5);
}

TEST(GaussianNll, RejectsNonFiniteAndSubFloorSigma) {
  EXPECT_THROW(gaussian_nll(NAN, 0.0, 1.0), NumericError);
  EXPECT_THROW(gaussian_nll(0.0, INFINITY, 1.0), NumericError);
  EXPECT_THROW(gaussian_nll(0.0, 0.0, 0.0), UsageError);
  EXPECT_NO_THROW(gaussian_nll(0.0, 0.0, kSigmaFloor));
}

TEST(LikaReg, WorkedValues) {
  EXPECT_EQ(lika_reg(1.5, 1.5, 0.0, {3.0, 7.0}).value, 0.0);
  EXPECT_DOUBLE_EQ(lika_reg(2.0, 0.0, 3.0, {1.0, 1.0}).value, 5.0);
  EXPECT_DOUBLE_EQ(lika_reg(-2.0, 0.0, 2.0, {0.5, 2.0}).value, 2.0);
}

TEST(LikaReg, SubgradientAtZeroResidual) {
  const LossEval e = lika_reg(1.0, 1.0, 0.7, {2.0, 3.0});
  EXPECT_EQ(e.d_mean, 0.0);
  EXPECT_DOUBLE_EQ(e.d_sigma, 2.0 * 3.0 * 0.7);
}

TEST(LikaLoss, WorkedValues) {
  EXPECT_DOUBLE_EQ(lika_loss(1.0, 0.0, 1.0, {1.0, 1.0}).value, 1.5);
  for (double u : {-3.0, -0.2, 0.0, 0.4, 5.0}) {
    for (double s : {1e-3, 0.5, 2.0}) {
      const LossEval a = lika_loss(u, 0.0, s, {0.0, 0.0});
      const LossEval b = gaussian_nll(u, 0.0, s);
      EXPECT_EQ(a.value, b.value);
      EXPECT_EQ(a.d_mean, b.d_mean);
      EXPECT_EQ(a.d_sigma, b.d_sigma);
    }
  }
}

TEST(LikaLossPiecewise, WorkedBranches) {
  EXPECT_DOUBLE_EQ(lika_loss_piecewise(3.0, 1.0, 1.0, {0.0, 1.0}).value -
                       gaussian_nll(3.0, 1.0, 1.0).value,
                   1.0);
  EXPECT_DOUBLE_EQ(lika_loss_piecewise(0.0, 1.0, 2.0, {0.0, 1.0}).value -
                       gaussian_nll(0.0, 1.0, 2.0).value,
                   1.0);
  EXPECT_DOUBLE_EQ(lika_reg(3.0, 1.0, 1.0, {0.0, 1.0}).value, 1.0);
  EXPECT_DOUBLE_EQ(lika_reg(0.0, 1.0, 2.0, {0.0, 1.0}).value, 1.0);
  // sigma == 0 degenerates both forms to t3 u^2.
  EXPECT_DOUBLE_EQ(lika_reg(-1.5, 0.0, 0.0, {0.0, 2.0}).value, 2.0 * 2.25);
}

TEST(LikaLossPiecewise, MatchesRewrittenFormOnRandomTuples) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(-10.0, 10.0), s(kSigmaFloor, 10.0), t(0.0, 100.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double y_hat = u(rng), sigma = s(rng);
    const TemperaturePair temps{t(rng), t(rng)};
    const double a = lika_loss_piecewise(y_hat, 0.0, sigma, temps).value;
    const double b = lika_loss(y_hat, 0.0, sigma, temps).value;
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(b), 1e-300));
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(NormConstant, WorkedValues) {
  EXPECT_NEAR(norm_constant(1.0, {0.0, 0.0}), std::sqrt(2.0 * std::numbers::pi), 1e-14);
  // Frozen from adaptive quadrature of the unnormalized density.
  EXPECT_NEAR(norm_constant(1.0, {1.0, 0.0}), 1.4472025091165353, 1e-12);
  EXPECT_NEAR(norm_constant(1.0, {1.0, 0.0}), 2.0 * std::sqrt(std::numbers::pi) / std::sqrt(6.0),
              1e-14);
  EXPECT_NEAR(norm_constant(0.5, {0.0, 2.0}), 1.0494402325318200, 1e-12);
}

TEST(NormConstant, MatchesQuadratureOnGrid) {
  for (double sigma : {0.1, 1.0, 5.0}) {
    for (double t2 : {0.0, 0.1, 1.0, 10.0}) {
      for (double t3 : {0.0, 0.1, 1.0, 10.0}) {
        const TemperaturePair t{t2, t3};
        const double q = integrate_real_line([&](double u) { return density(u, sigma, t); },
                                             reach(sigma, t));
        EXPECT_NEAR(norm_constant(sigma, t) / q, 1.0, 1e-6)
            << "sigma=" << sigma << " t2=" << t2 << " t3=" << t3;
      }
    }
  }
}

TEST(NormConstant, LargeErfArgumentStaysFinite) {
  // erf argument 2 s^2 t3 / sqrt(4 s^2 (t2 + t3) + 2) is ~ 22 here.
  const double z = log_norm_constant(5.0, {0.0, 100.0});
  EXPECT_TRUE(std::isfinite(z));
  const TemperaturePair t{0.0, 100.0};
  const double q =
      integrate_real_line([&](double u) { return density(u, 5.0, t); }, reach(5.0, t));
  EXPECT_NEAR(std::exp(z) / q, 1.0, 1e-6);
}

TEST(LikaNormLoss, WorkedValues) {
  EXPECT_NEAR(lika_norm_loss(0.0, 0.0, 2.0, {0.0, 0.0}).value, -std::log(2.0), 1e-14);
  EXPECT_NEAR(lika_norm_loss(1.0, 0.0, 1.0, {0.0, 0.0}).value, 0.5, 1e-14);
  EXPECT_NEAR(lika_norm_loss(0.0, 0.0, 1.0, {1.0, 1.0}).value, 0.88790901089760361, 1e-12);
}

TEST(ExactNormNll, WorkedValues) {
  EXPECT_NEAR(exact_norm_nll(1.0, 0.0, 1.0, {0.0, 0.0}).value,
              0.5 * std::log(2.0 * std::numbers::pi) + 0.5, 1e-14);
  EXPECT_NEAR(exact_norm_nll(1.0, 0.0, 1.0, {0.0, 0.0}).value, 1.41894, 1e-5);
  EXPECT_NEAR(exact_norm_nll(1.0, 0.0, 1.0, {1.0, 0.0}).value, 1.8696323888706179, 1e-12);
}

TEST(ExactNormNll, DensityIntegratesToOne) {
  for (double sigma : {0.1, 1.0, 5.0}) {
    for (double t2 : {0.0, 0.1, 1.0, 10.0}) {
      for (double t3 : {0.0, 0.1, 1.0, 10.0}) {
        const TemperaturePair t{t2, t3};
        const double mass = integrate_real_line(
            [&](double u) { return std::exp(-exact_norm_nll(u, 0.0, sigma, t).value); },
            reach(sigma, t));
        EXPECT_NEAR(mass, 1.0, 1e-6) << "sigma=" << sigma << " t2=" << t2 << " t3=" << t3;
      }
    }
  }
}

TEST(Losses, DerivativesMatchCentralDifferences) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-5.0, 5.0), s(0.05, 5.0), t(0.0, 20.0);
  for (const auto& [name, fn] : kLosses) {
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      double y_hat = u(rng);
      if (std::abs(y_hat) < 1e-3) y_hat = 0.5;  // keep away from the |u| kink
      const double sigma = s(rng);
      const TemperaturePair temps{t(rng), t(rng)};
      if (std::abs(sigma - std::abs(y_hat)) < 1e-3) continue;
      const LossEval e = fn(y_hat, 0.0, sigma, temps);
      const double fd_mean =
          central_diff([&](double v) { return fn(v, 0.0, sigma, temps).value; }, y_hat);
      const double fd_sigma =
          central_diff([&](double v) { return fn(y_hat, 0.0, v, temps).value; }, sigma);
      const double scale = 1e-6 * (1.0 + std::abs(e.value));
      worst = std::max(worst, std::abs(e.d_mean - fd_mean) /
                                  std::max({std::abs(e.d_mean), std::abs(fd_mean), scale}));
      worst = std::max(worst, std::abs(e.d_sigma - fd_sigma) /
                                  std::max({std::abs(e.d_sigma), std::abs(fd_sigma), scale}));
    }
    EXPECT_LT(worst, 1e-5) << name;
  }
}

TEST(Losses, SymmetricInResidual) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0), s(0.01, 10.0), t(0.0, 100.0);
  for (int i = 0; i < 5000; ++i) {
    const double r = u(rng), sigma = s(rng);
    const TemperaturePair temps{t(rng), t(rng)};
    for (const auto& [name, fn] : kLosses) {
      const double a = fn(r, 0.0, sigma, temps).value;
      const double b = fn(-r, 0.0, sigma, temps).value;
      EXPECT_NEAR(a, b, 1e-12 * (1.0 + std::abs(a))) << name;
    }
  }
}

TEST(LikaLoss, MonotoneInTemperatures) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0), s(0.01, 5.0), t(0.0, 50.0), dt(0.0, 5.0);
  for (int i = 0; i < 5000; ++i) {
    const double r = u(rng), sigma = s(rng);
    const TemperaturePair base{t(rng), t(rng)};
    const double v = lika_loss(r, 0.0, sigma, base).value;
    EXPECT_GE(lika_loss(r, 0.0, sigma, {base.t2 + dt(rng), base.t3}).value, v);
    EXPECT_GE(lika_loss(r, 0.0, sigma, {base.t2, base.t3 + dt(rng)}).value, v);
  }
}

TEST(LossKind, ParsesAllNamesAndRejectsOthers) {
  for (LossKind k : {LossKind::kNll, LossKind::kLika, LossKind::kLikaNorm, LossKind::kLikaExact}) {
    EXPECT_EQ(parse_loss_kind(to_string(k)), k);
  }
  EXPECT_THROW(parse_loss_kind("mse"), UsageError);
}

}  // namespace
}  // namespace lika
