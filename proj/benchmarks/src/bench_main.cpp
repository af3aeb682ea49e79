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


#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "lika/data.hpp"
#include "lika/losses.hpp"
#include "lika/metrics.hpp"
#include "lika/model.hpp"

namespace {

struct Tuples {
  std::vector<double> y_hat, y, sigma;
};

Tuples random_tuples(std::size_t n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> pos(0.05, 3.0);
  Tuples t;
  for (std::size_t i = 0; i < n; ++i) {
    t.y_hat.push_back(normal(rng));
    t.y.push_back(normal(rng));
    t.sigma.push_back(pos(rng));
  }
  return t;
}

void BM_Loss(benchmark::State& state) {
  const auto kind = static_cast<lika::LossKind>(state.range(0));
  const Tuples t = random_tuples(4096);
  const lika::TemperaturePair temps{0.7, 1.3};
  for (auto _ : state) {
    double acc = 0.0;
    for (std::size_t i = 0; i < t.y.size(); ++i)
      acc += lika::evaluate_loss(kind, t.y_hat[i], t.y[i], t.sigma[i], temps).value;
    benchmark::DoNotOptimize(acc);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(t.y.size()));
  state.SetLabel(std::string(lika::to_string(kind)));
}
BENCHMARK(BM_Loss)->DenseRange(0, 3);

void BM_LossAndGradient(benchmark::State& state) {
  lika::ModelSpec spec;
  const lika::ModelParams params = lika::init_model(spec, 1);
  const lika::Dataset ds = lika::generate_synthetic(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    auto lg = lika::loss_and_gradient(params, spec, lika::LossKind::kLika, {1.0, 1.0},
                                      ds.inputs, ds.targets);
    benchmark::DoNotOptimize(lg.loss);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradient)->Arg(64)->Arg(512);

void BM_TrainEpochs(benchmark::State& state) {
  const lika::Dataset ds = lika::generate_synthetic(500, 3);
  lika::TrainOptions opt;
  opt.epochs = 10;
  for (auto _ : state) {
    auto r = lika::train(lika::ModelSpec{}, ds, opt);
    benchmark::DoNotOptimize(r.trace.size());
  }
}
BENCHMARK(BM_TrainEpochs)->Unit(benchmark::kMillisecond);

void BM_Uce(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Tuples t = random_tuples(static_cast<std::size_t>(n));
  lika::EvalBatch b(Eigen::Map<const Eigen::MatrixXd>(t.y_hat.data(), n, 1),
                    Eigen::Map<const Eigen::MatrixXd>(t.sigma.data(), n, 1),
                    Eigen::Map<const Eigen::MatrixXd>(t.y.data(), n, 1));
  for (auto _ : state) benchmark::DoNotOptimize(lika::uce(b).value);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Uce)->Arg(1 << 10)->Arg(1 << 16);

}  // namespace

BENCHMARK_MAIN();
