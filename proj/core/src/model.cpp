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

#include "lika/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>

#include <json.hpp>

#include "lika/metrics.hpp"

namespace lika {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

Activation parse_activation(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  throw UsageError("unknown activation '" + std::string(name) + "' (allowed: tanh, relu)");
}

std::string_view to_string(WeightPrior p) {
  switch (p) {
    case WeightPrior::kUniform: return "uniform";
    case WeightPrior::kGaussian: return "gaussian";
    case WeightPrior::kLaplace: return "laplace";
  }
  return "unknown";
}

WeightPrior parse_weight_prior(std::string_view name) {
  if (name == "uniform") return WeightPrior::kUniform;
  if (name == "gaussian") return WeightPrior::kGaussian;
  if (name == "laplace") return WeightPrior::kLaplace;
  throw UsageError("unknown prior '" + std::string(name) +
                   "' (allowed: uniform, gaussian, laplace)");
}

void ModelSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw UsageError("model: dimensions must be >= 1");
  for (int w : hidden_layers) {
    if (w < 1) throw UsageError("model: hidden widths must be >= 1");
  }
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw UsageError("model: dropout_rate must lie in [0, 1)");
  }
}

namespace {

struct Layout {
  std::vector<int> in;
  std::vector<int> out;
  std::vector<std::size_t> w_off;
  std::vector<std::size_t> b_off;
  std::size_t total = 0;
};

Layout make_layout(const ModelSpec& spec) {
  Layout l;
  int prev = spec.input_dim;
  std::vector<int> widths = spec.hidden_layers;
  widths.push_back(spec.head_width());
  for (int w : widths) {
    l.in.push_back(prev);
    l.out.push_back(w);
    l.w_off.push_back(l.total);
    l.total += static_cast<std::size_t>(prev) * static_cast<std::size_t>(w);
    l.b_off.push_back(l.total);
    l.total += static_cast<std::size_t>(w);
    prev = w;
  }
  return l;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Vectorizes through Eigen's exp; absolute error stays near machine epsilon.
MatrixXd fast_tanh(const MatrixXd& z) {
  const Eigen::ArrayXXd e = (-2.0 * z.array().abs()).exp();
  return ((1.0 - e) / (1.0 + e) * z.array().sign()).matrix();
}

struct Forward {
  std::vector<MatrixXd> a;     // a[l]: input to layer l (post-dropout), features x batch
  std::vector<MatrixXd> h;     // a[l+1] before dropout, hidden layers only
  std::vector<MatrixXd> mask;  // scaled keep masks; empty when dropout is off
  MatrixXd out;                // head_width x batch
};

// xt: features x batch, already standardized.
void forward(std::span<const double> values, const ModelSpec& spec, const Layout& lay,
             const MatrixXd& xt, Forward& f, std::mt19937_64* dropout_rng) {
  const std::size_t n_layers = lay.in.size();
  const bool drop = dropout_rng != nullptr && spec.dropout_rate > 0.0;
  f.a.resize(n_layers);
  f.h.resize(n_layers - 1);
  f.mask.assign(drop ? n_layers - 1 : 0, MatrixXd());
  f.a[0] = xt;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double keep_scale = drop ? 1.0 / (1.0 - spec.dropout_rate) : 1.0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    // Aligned copies keep Eigen's kernel choice, and so the rounding, independent of
    // where the parameter vector happens to live.
    const MatrixXd w = Eigen::Map<const MatrixXd>(values.data() + lay.w_off[l], lay.out[l], lay.in[l]);
    const VectorXd b = Eigen::Map<const VectorXd>(values.data() + lay.b_off[l], lay.out[l]);
    MatrixXd z = w * f.a[l];
    z.colwise() += b;
    if (l + 1 == n_layers) {
      f.out = std::move(z);
      break;
    }
    if (spec.activation == Activation::kTanh) {
      f.h[l] = fast_tanh(z);
    } else {
      f.h[l] = z.array().max(0.0).matrix();
    }
    if (drop) {
      MatrixXd m(z.rows(), z.cols());
      for (Index k = 0; k < m.size(); ++k) {
        m(k) = unif(*dropout_rng) < spec.dropout_rate ? 0.0 : keep_scale;
      }
      f.a[l + 1] = f.h[l].cwiseProduct(m);
      f.mask[l] = std::move(m);
    } else {
      f.a[l + 1] = f.h[l];
    }
  }
}

// Heads in standardized units: mean and sigma, both output_dim x batch.
void heads(const ModelSpec& spec, const MatrixXd& out, MatrixXd& mean, MatrixXd& sigma) {
  const int n = spec.output_dim;
  mean = out.topRows(n);
  sigma.resize(n, out.cols());
  for (Index c = 0; c < out.cols(); ++c) {
    for (int r = 0; r < n; ++r) sigma(r, c) = softplus(out(n + r, c)) + kSigmaFloor;
  }
}

// Standardized heads (output_dim x batch) to a raw-unit BatchPrediction.
BatchPrediction unscale(const Standardizer& s, const MatrixXd& mean_t,
                        const MatrixXd& sigma_t) {
  BatchPrediction p;
  p.mean = mean_t.transpose();
  p.sigma = sigma_t.transpose();
  if (s.target_shift.size() > 0) {
    for (Index c = 0; c < p.mean.cols(); ++c) {
      p.mean.col(c) = p.mean.col(c).array() * s.target_scale(c) + s.target_shift(c);
      p.sigma.col(c) = (p.sigma.col(c).array() * s.target_scale(c)).max(kSigmaFloor);
    }
  }
  return p;
}

void require_params(const ModelParams& params, const ModelSpec& spec) {
  spec.validate();
  if (params.values.size() != spec.parameter_count()) {
    throw UsageError("model: parameter vector has " + std::to_string(params.values.size()) +
                     " entries, spec needs " + std::to_string(spec.parameter_count()));
  }
}

void require_input_width(const ModelSpec& spec, Index cols) {
  if (cols != spec.input_dim) {
    throw UsageError("model: input has " + std::to_string(cols) + " features, expected " +
                     std::to_string(spec.input_dim));
  }
}

MatrixXd row_matrix(std::span<const double> x) {
  MatrixXd m(1, static_cast<Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) m(0, static_cast<Index>(i)) = x[i];
  return m;
}

PredictiveDistribution first_row(const BatchPrediction& p) {
  return p.to_distributions().front();
}

}  // namespace

std::size_t ModelSpec::parameter_count() const { return make_layout(*this).total; }

MatrixXd Standardizer::scale_inputs(const MatrixXd& x) const {
  if (input_shift.size() == 0) return x;
  MatrixXd out = x;
  for (Index c = 0; c < x.cols(); ++c) {
    out.col(c) = (x.col(c).array() - input_shift(c)) / input_scale(c);
  }
  return out;
}

MatrixXd Standardizer::scale_targets(const MatrixXd& y) const {
  if (target_shift.size() == 0) return y;
  MatrixXd out = y;
  for (Index c = 0; c < y.cols(); ++c) {
    out.col(c) = (y.col(c).array() - target_shift(c)) / target_scale(c);
  }
  return out;
}

Standardizer Standardizer::fit(const Dataset& ds) {
  const auto train = ds.indices(Split::kTrain);
  if (train.empty()) throw DataError("standardizer: no train rows");
  const auto stats = [&](const MatrixXd& m, VectorXd& mean, VectorXd& sd) {
    mean = VectorXd::Zero(m.cols());
    sd = VectorXd::Zero(m.cols());
    for (auto r : train) mean += m.row(r).transpose();
    mean /= static_cast<double>(train.size());
    for (auto r : train) sd += (m.row(r).transpose() - mean).array().square().matrix();
    sd = (sd / static_cast<double>(train.size())).array().sqrt().matrix();
    for (Index c = 0; c < sd.size(); ++c) {
      if (!(sd(c) > 0.0)) sd(c) = 1.0;
    }
  };
  Standardizer s;
  stats(ds.inputs, s.input_shift, s.input_scale);
  stats(ds.targets, s.target_shift, s.target_scale);
  return s;
}

std::vector<PredictiveDistribution> BatchPrediction::to_distributions() const {
  std::vector<PredictiveDistribution> out(static_cast<std::size_t>(mean.rows()));
  for (Index r = 0; r < mean.rows(); ++r) {
    auto& d = out[static_cast<std::size_t>(r)];
    d.mean.resize(static_cast<std::size_t>(mean.cols()));
    d.sigma.resize(static_cast<std::size_t>(mean.cols()));
    for (Index c = 0; c < mean.cols(); ++c) {
      d.mean[static_cast<std::size_t>(c)] = mean(r, c);
      d.sigma[static_cast<std::size_t>(c)] = sigma(r, c);
    }
  }
  return out;
}

ModelParams init_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Layout lay = make_layout(spec);
  ModelParams p;
  p.values.assign(lay.total, 0.0);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < lay.in.size(); ++l) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(lay.in[l]));
    std::uniform_real_distribution<double> unif(-scale, scale);
    const std::size_t n_w = static_cast<std::size_t>(lay.in[l]) * lay.out[l];
    for (std::size_t k = 0; k < n_w; ++k) p.values[lay.w_off[l] + k] = unif(rng);
    const bool head = l + 1 == lay.in.size();
    for (int k = 0; k < lay.out[l]; ++k) {
      double b = unif(rng);
      if (head) b = k < spec.output_dim ? 0.0 : std::log(std::numbers::e - 1.0);
      p.values[lay.b_off[l] + static_cast<std::size_t>(k)] = b;
    }
  }
  return p;
}

BatchPrediction predict_batch(const ModelParams& params, const ModelSpec& spec,
                              const MatrixXd& x) {
  require_params(params, spec);
  require_input_width(spec, x.cols());
  if (!x.allFinite()) throw UsageError("predict: non-finite input");
  const Layout lay = make_layout(spec);
  Forward f;
  forward(params.values, spec, lay, params.scaler.scale_inputs(x).transpose(), f, nullptr);
  MatrixXd mean, sigma;
  heads(spec, f.out, mean, sigma);
  return unscale(params.scaler, mean, sigma);
}

PredictiveDistribution predict(const ModelParams& params, const ModelSpec& spec,
                               std::span<const double> x) {
  return first_row(predict_batch(params, spec, row_matrix(x)));
}

std::vector<PredictiveDistribution> predict(const ModelParams& params,
                                            const ModelSpec& spec, const MatrixXd& x) {
  return predict_batch(params, spec, x).to_distributions();
}

BatchPrediction ensemble_predict(std::span<const ModelParams> members,
                                 const ModelSpec& spec, const MatrixXd& x) {
  if (members.empty()) throw UsageError("ensemble_predict: no members");
  BatchPrediction acc = predict_batch(members[0], spec, x);
  if (members.size() == 1) return acc;
  MatrixXd var = acc.sigma.array().square().matrix();
  for (std::size_t k = 1; k < members.size(); ++k) {
    const BatchPrediction p = predict_batch(members[k], spec, x);
    acc.mean += p.mean;
    var += p.sigma.array().square().matrix();
  }
  const double n = static_cast<double>(members.size());
  acc.mean /= n;
  acc.sigma = (var / n).array().sqrt().max(kSigmaFloor).matrix();
  return acc;
}

PredictiveDistribution ensemble_predict(std::span<const ModelParams> members,
                                        const ModelSpec& spec, std::span<const double> x) {
  return first_row(ensemble_predict(members, spec, row_matrix(x)));
}

BatchPrediction mc_dropout_predict(const ModelParams& params, const ModelSpec& spec,
                                   const MatrixXd& x, int n_passes, std::uint64_t seed) {
  if (n_passes < 1) throw UsageError("mc_dropout_predict: n_passes must be >= 1");
  if (spec.dropout_rate == 0.0) return predict_batch(params, spec, x);
  require_params(params, spec);
  require_input_width(spec, x.cols());
  const Layout lay = make_layout(spec);
  const MatrixXd xt = params.scaler.scale_inputs(x).transpose();
  std::mt19937_64 rng(seed);
  MatrixXd mean_sum = MatrixXd::Zero(x.rows(), spec.output_dim);
  MatrixXd var_sum = MatrixXd::Zero(x.rows(), spec.output_dim);
  Forward f;
  MatrixXd m, s;
  for (int k = 0; k < n_passes; ++k) {
    forward(params.values, spec, lay, xt, f, &rng);
    heads(spec, f.out, m, s);
    const BatchPrediction p = unscale(params.scaler, m, s);
    mean_sum += p.mean;
    var_sum += p.sigma.array().square().matrix();
  }
  BatchPrediction out;
  out.mean = mean_sum / n_passes;
  out.sigma = (var_sum / n_passes).array().sqrt().max(kSigmaFloor).matrix();
  return out;
}

PredictiveDistribution mc_dropout_predict(const ModelParams& params, const ModelSpec& spec,
                                          std::span<const double> x, int n_passes,
                                          std::uint64_t seed) {
  return first_row(mc_dropout_predict(params, spec, row_matrix(x), n_passes, seed));
}

BatchPrediction ttda_predict(const ModelParams& params, const ModelSpec& spec,
                             const MatrixXd& x, int n_aug, const VectorXd& aug_sigma,
                             std::uint64_t seed) {
  if (n_aug < 1) throw UsageError("ttda_predict: n_aug must be >= 1");
  if (aug_sigma.size() != x.cols()) throw UsageError("ttda_predict: aug_sigma width mismatch");
  if ((aug_sigma.array() < 0.0).any()) throw UsageError("ttda_predict: negative aug_sigma");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MatrixXd> means;
  means.reserve(static_cast<std::size_t>(n_aug) + 1);
  means.push_back(predict_batch(params, spec, x).mean);
  for (int k = 0; k < n_aug; ++k) {
    MatrixXd xp = x;
    for (Index c = 0; c < xp.cols(); ++c) {
      for (Index r = 0; r < xp.rows(); ++r) xp(r, c) += aug_sigma(c) * normal(rng);
    }
    means.push_back(predict_batch(params, spec, xp).mean);
  }
  const double n = static_cast<double>(means.size());
  MatrixXd avg = MatrixXd::Zero(x.rows(), spec.output_dim);
  for (const auto& m : means) avg += m;
  avg /= n;
  MatrixXd var = MatrixXd::Zero(x.rows(), spec.output_dim);
  for (const auto& m : means) var += (m - avg).array().square().matrix();
  var /= (n - 1.0);
  BatchPrediction out;
  out.mean = std::move(avg);
  out.sigma = var.array().sqrt().max(kSigmaFloor).matrix();
  return out;
}

PredictiveDistribution ttda_predict(const ModelParams& params, const ModelSpec& spec,
                                    std::span<const double> x, int n_aug, double aug_sigma,
                                    std::uint64_t seed) {
  const VectorXd s = VectorXd::Constant(static_cast<Index>(x.size()), aug_sigma);
  return first_row(ttda_predict(params, spec, row_matrix(x), n_aug, s, seed));
}

// --- Gradients ------------------------------------------------------------

namespace {

// Loss over standardized columns (features x batch / output_dim x batch) and,
// when `grad` is non-null, its gradient accumulated into *grad.
double batch_objective(std::span<const double> values, const ModelSpec& spec,
                       const Layout& lay, LossKind kind, TemperaturePair temps,
                       const MatrixXd& xt, const MatrixXd& yt, WeightPrior prior,
                       double lambda, std::mt19937_64* dropout_rng,
                       std::vector<double>* grad) {
  Forward f;
  forward(values, spec, lay, xt, f, dropout_rng);
  const int n = spec.output_dim;
  const Index batch = xt.cols();
  const double w = 1.0 / (static_cast<double>(batch) * n);

  MatrixXd d_out(spec.head_width(), batch);
  double loss = 0.0;
  for (Index c = 0; c < batch; ++c) {
    for (int r = 0; r < n; ++r) {
      const double raw = f.out(n + r, c);
      const double sigma = softplus(raw) + kSigmaFloor;
      const LossEval e = evaluate_loss(kind, f.out(r, c), yt(r, c), sigma, temps);
      loss += w * e.value;
      d_out(r, c) = w * e.d_mean;
      d_out(n + r, c) = w * e.d_sigma * sigmoid(raw);
    }
  }

  const std::size_t n_layers = lay.in.size();
  if (prior != WeightPrior::kUniform && lambda > 0.0) {
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::size_t n_w = static_cast<std::size_t>(lay.in[l]) * lay.out[l];
      for (std::size_t k = 0; k < n_w; ++k) {
        const double v = values[lay.w_off[l] + k];
        loss += prior == WeightPrior::kGaussian ? lambda * v * v : lambda * std::abs(v);
      }
    }
  }
  if (grad == nullptr) return loss;

  grad->assign(values.size(), 0.0);
  MatrixXd delta = std::move(d_out);
  for (std::size_t li = n_layers; li-- > 0;) {
    const MatrixXd gw = delta * f.a[li].transpose();
    const VectorXd gb = delta.rowwise().sum();
    Eigen::Map<MatrixXd>(grad->data() + lay.w_off[li], lay.out[li], lay.in[li]) = gw;
    Eigen::Map<VectorXd>(grad->data() + lay.b_off[li], lay.out[li]) = gb;
    if (li == 0) break;
    const MatrixXd w_l =
        Eigen::Map<const MatrixXd>(values.data() + lay.w_off[li], lay.out[li], lay.in[li]);
    MatrixXd da = w_l.transpose() * delta;
    if (!f.mask.empty()) da.array() *= f.mask[li - 1].array();
    const MatrixXd& h = f.h[li - 1];
    if (spec.activation == Activation::kTanh) {
      da.array() *= 1.0 - h.array().square();
    } else {
      da.array() *= (h.array() > 0.0).cast<double>();
    }
    delta = std::move(da);
  }

  if (prior != WeightPrior::kUniform && lambda > 0.0) {
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::size_t n_w = static_cast<std::size_t>(lay.in[l]) * lay.out[l];
      for (std::size_t k = 0; k < n_w; ++k) {
        const double v = values[lay.w_off[l] + k];
        (*grad)[lay.w_off[l] + k] += prior == WeightPrior::kGaussian
                                         ? 2.0 * lambda * v
                                         : lambda * (v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0));
      }
    }
  }
  return loss;
}

}  // namespace

LossAndGrad loss_and_gradient(const ModelParams& params, const ModelSpec& spec,
                              LossKind loss, TemperaturePair temps, const MatrixXd& x,
                              const MatrixXd& y, WeightPrior prior, double prior_lambda) {
  require_params(params, spec);
  require_input_width(spec, x.cols());
  if (y.rows() != x.rows() || y.cols() != spec.output_dim) {
    throw UsageError("loss_and_gradient: target shape mismatch");
  }
  const Layout lay = make_layout(spec);
  const MatrixXd xt = params.scaler.scale_inputs(x).transpose();
  const MatrixXd yt = params.scaler.scale_targets(y).transpose();
  LossAndGrad out;
  out.loss = batch_objective(params.values, spec, lay, loss, temps, xt, yt, prior,
                             prior_lambda, nullptr, &out.grad);
  return out;
}

// --- Training -------------------------------------------------------------

namespace {

MatrixXd gather_columns(const MatrixXd& src_t, std::span<const Index> cols) {
  MatrixXd out(src_t.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = src_t.col(cols[k]);
  return out;
}

}  // namespace

TrainResult train(const ModelSpec& spec, const Dataset& dataset, const TrainOptions& opt) {
  spec.validate();
  dataset.validate();
  if (opt.epochs < 1) throw UsageError("train: epochs must be >= 1");
  if (opt.batch_size < 1) throw UsageError("train: batch_size must be >= 1");
  if (dataset.input_dim() != spec.input_dim || dataset.output_dim() != spec.output_dim) {
    throw UsageError("train: dataset dimensions do not match the model spec");
  }
  TemperatureSchedule sched = opt.schedule;
  sched.total_epochs = opt.epochs;
  sched.validate();

  const Dataset train_set = dataset.subset(Split::kTrain);
  const Dataset val_set = dataset.subset(Split::kVal);
  if (train_set.rows() == 0) throw DataError("train: no train rows");
  if (val_set.rows() == 0) throw DataError("train: no validation rows");

  TrainResult result;
  result.params = init_model(spec, opt.seed);
  if (opt.standardize) result.params.scaler = Standardizer::fit(dataset);
  const Standardizer& scaler = result.params.scaler;

  const MatrixXd x_train_t = scaler.scale_inputs(train_set.inputs).transpose();
  const MatrixXd y_train_t = scaler.scale_targets(train_set.targets).transpose();
  const MatrixXd y_val_t = scaler.scale_targets(val_set.targets).transpose();

  const Layout lay = make_layout(spec);
  AdamState adam(lay.total);
  std::mt19937_64 shuffle_rng(opt.seed);
  std::mt19937_64 dropout_rng(opt.seed ^ 0xd1b54a32d192ed03ULL);
  std::mt19937_64* drop = spec.dropout_rate > 0.0 ? &dropout_rng : nullptr;

  std::vector<Index> order(static_cast<std::size_t>(train_set.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::vector<double> grad;
  const double n_train = static_cast<double>(train_set.rows());

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = cosine_lr(epoch - 1, opt.epochs, opt.lr0, opt.lr_min);
    const TemperaturePair temps = opt.loss == LossKind::kNll
                                      ? TemperaturePair{}
                                      : temperatures_at(epoch - 1, sched, opt.anneal);
    rec.t2 = temps.t2;
    rec.t3 = temps.t3;

    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double train_loss = 0.0;
    try {
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(opt.batch_size)) {
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(opt.batch_size));
        const std::span<const Index> idx(order.data() + start, stop - start);
        const MatrixXd xb = gather_columns(x_train_t, idx);
        const MatrixXd yb = gather_columns(y_train_t, idx);
        const double l = batch_objective(result.params.values, spec, lay, opt.loss, temps,
                                         xb, yb, opt.prior, opt.prior_lambda, drop, &grad);
        if (!std::isfinite(l)) throw NumericError("non-finite training loss");
        train_loss += l * static_cast<double>(idx.size()) / n_train;
        clip_grad_norm(grad, opt.clip_norm);
        adam_step(adam, result.params.values, grad, rec.lr);
      }
      rec.train_loss = train_loss;

      const BatchPrediction val = predict_batch(result.params, spec, val_set.inputs);
      const MatrixXd mean_t = scaler.scale_targets(val.mean);
      double val_loss = 0.0;
      const double w = 1.0 / static_cast<double>(val.mean.size());
      for (Index r = 0; r < val.mean.rows(); ++r) {
        for (Index c = 0; c < val.mean.cols(); ++c) {
          const double s = scaler.target_scale.size() ? scaler.target_scale(c) : 1.0;
          const double sigma_t = std::max(val.sigma(r, c) / s, kSigmaFloor);
          val_loss += w * evaluate_loss(opt.loss, mean_t(r, c), y_val_t(c, r), sigma_t, temps).value;
        }
      }
      if (!std::isfinite(val_loss)) throw NumericError("non-finite validation loss");
      rec.val_loss = val_loss;
      const EvalBatch vb(val.mean, val.sigma, val_set.targets);
      rec.val_mae = regression_metrics(vb).mae;
      rec.val_uce = uce(vb, opt.uce_bins).value;
      rec.val_ece = ece(vb);
    } catch (const NumericError& e) {
      throw TrainingError("training aborted at epoch " + std::to_string(epoch) + ": " +
                              e.what(),
                          std::move(result.trace));
    } catch (const UsageError& e) {
      // Non-finite predictions surface from EvalBatch/predict as usage errors.
      throw TrainingError("training aborted at epoch " + std::to_string(epoch) + ": " +
                              e.what(),
                          std::move(result.trace));
    }
    result.trace.push_back(rec);
  }
  return result;
}

// --- Checkpoints ----------------------------------------------------------

namespace {

nlohmann::json vec_json(const VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

VectorXd json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelSpec& spec,
                     const ModelParams& params) {
  require_params(params, spec);
  nlohmann::json j;
  j["format"] = "lika-checkpoint";
  j["version"] = 1;
  j["spec"] = {{"input-dim", spec.input_dim},
               {"output-dim", spec.output_dim},
               {"hidden-layers", spec.hidden_layers},
               {"activation", std::string(to_string(spec.activation))},
               {"dropout-rate", spec.dropout_rate}};
  j["scaler"] = {{"input-shift", vec_json(params.scaler.input_shift)},
                 {"input-scale", vec_json(params.scaler.input_scale)},
                 {"target-shift", vec_json(params.scaler.target_shift)},
                 {"target-scale", vec_json(params.scaler.target_scale)}};
  j["params"] = params.values;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out << j.dump() << '\n';
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

std::pair<ModelSpec, ModelParams> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  try {
    nlohmann::json j;
    in >> j;
    if (j.at("format") != "lika-checkpoint" || j.at("version") != 1) {
      throw DataError("'" + path.string() + "' is not a version-1 lika checkpoint");
    }
    ModelSpec spec;
    const auto& s = j.at("spec");
    spec.input_dim = s.at("input-dim").get<int>();
    spec.output_dim = s.at("output-dim").get<int>();
    spec.hidden_layers = s.at("hidden-layers").get<std::vector<int>>();
    spec.activation = parse_activation(s.at("activation").get<std::string>());
    spec.dropout_rate = s.at("dropout-rate").get<double>();
    ModelParams p;
    p.values = j.at("params").get<std::vector<double>>();
    const auto& sc = j.at("scaler");
    p.scaler.input_shift = json_vec(sc.at("input-shift"));
    p.scaler.input_scale = json_vec(sc.at("input-scale"));
    p.scaler.target_shift = json_vec(sc.at("target-shift"));
    p.scaler.target_scale = json_vec(sc.at("target-scale"));
    require_params(p, spec);
    return {spec, p};
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint '" + path.string() + "': " + e.what());
  }
}

}  // namespace lika
