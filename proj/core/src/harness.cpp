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

#include "lika/harness.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lika/error.hpp"

namespace lika {

using json = nlohmann::ordered_json;

namespace {

constexpr Method kAllMethods[] = {Method::kNll,    Method::kLika,    Method::kLikaNorm,
                                  Method::kLikaExact, Method::kDoNll, Method::kDoLika,
                                  Method::kEnsNll, Method::kEnsLika, Method::kTtda};

bool is_dropout(Method m) { return m == Method::kDoNll || m == Method::kDoLika; }
bool is_ensemble(Method m) { return m == Method::kEnsNll || m == Method::kEnsLika; }

// Offsets keep evaluation-time RNG streams apart from training streams.
constexpr std::uint64_t kMcDropoutSalt = 0x6a09e667f3bcc909ULL;
constexpr std::uint64_t kTtdaSalt = 0xbb67ae8584caa73bULL;
constexpr std::uint64_t kCorruptSalt = 0x3c6ef372fe94f82bULL;

std::string fmt(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kNll: return "nll";
    case Method::kLika: return "lika";
    case Method::kLikaNorm: return "lika-norm";
    case Method::kLikaExact: return "lika-exact";
    case Method::kDoNll: return "do-nll";
    case Method::kDoLika: return "do-lika";
    case Method::kEnsNll: return "ens-nll";
    case Method::kEnsLika: return "ens-lika";
    case Method::kTtda: return "ttda";
  }
  return "unknown";
}

std::string method_names() {
  std::string out;
  for (Method m : kAllMethods) {
    if (!out.empty()) out += ", ";
    out += to_string(m);
  }
  return out;
}

Method parse_method(std::string_view name) {
  for (Method m : kAllMethods) {
    if (to_string(m) == name) return m;
  }
  throw UsageError("unknown method '" + std::string(name) + "' (allowed: " + method_names() +
                   ")");
}

LossKind loss_for(Method m) {
  switch (m) {
    case Method::kNll:
    case Method::kDoNll:
    case Method::kEnsNll:
    case Method::kTtda: return LossKind::kNll;
    case Method::kLika:
    case Method::kDoLika:
    case Method::kEnsLika: return LossKind::kLika;
    case Method::kLikaNorm: return LossKind::kLikaNorm;
    case Method::kLikaExact: return LossKind::kLikaExact;
  }
  return LossKind::kNll;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw UsageError("epochs must be >= 1");
  if (batch_size < 1) throw UsageError("batch-size must be >= 1");
  if (!(lr0 >= lr_min) || lr_min < 0.0) throw UsageError("need lr >= lr-min >= 0");
  schedule.validate();
  if (is_ensemble(method) && ensemble_size < 2) {
    throw UsageError(std::string(to_string(method)) + " requires ensemble-size >= 2");
  }
  if (is_dropout(method) && !(dropout_rate > 0.0 && dropout_rate < 1.0)) {
    throw UsageError(std::string(to_string(method)) + " requires dropout-rate in (0, 1)");
  }
  if (prior_lambda < 0.0) throw UsageError("prior-lambda must be >= 0");
  if (bins < 1) throw UsageError("bins must be >= 1");
  if (mc_passes < 1) throw UsageError("mc-passes must be >= 1");
  if (ttda_copies < 1) throw UsageError("ttda-copies must be >= 1");
  if (ttda_fraction < 0.0) throw UsageError("ttda-fraction must be >= 0");
  for (int w : hidden_layers) {
    if (w < 1) throw UsageError("hidden-layers widths must be >= 1");
  }
}

AnnealPlan TrainConfig::effective_anneal() const {
  return anneal ? *anneal : AnnealPlan::coupled(schedule.t0);
}

// --- Config JSON ----------------------------------------------------------

namespace {

json channel_json(const TemperatureChannel& ch) {
  return json{{"mode", ch.mode == TemperatureChannel::Mode::kFixed ? "fixed" : "annealed"},
              {"value", ch.value}};
}

TemperatureChannel channel_from(const json& j) {
  const auto mode = j.at("mode").get<std::string>();
  const double v = j.at("value").get<double>();
  if (mode == "fixed") return TemperatureChannel::fixed(v);
  if (mode == "annealed") return TemperatureChannel::annealed(v);
  throw UsageError("anneal mode must be 'fixed' or 'annealed'");
}

json config_json(const TrainConfig& c) {
  json j;
  j["method"] = std::string(to_string(c.method));
  j["epochs"] = c.epochs;
  j["batch-size"] = c.batch_size;
  j["lr"] = c.lr0;
  j["lr-min"] = c.lr_min;
  j["t0"] = c.schedule.t0;
  j["t-end"] = c.schedule.t_end;
  if (c.anneal) {
    j["anneal"] = json{{"t2", channel_json(c.anneal->t2)}, {"t3", channel_json(c.anneal->t3)}};
  } else {
    j["anneal"] = nullptr;
  }
  j["seed"] = c.seed;
  j["ensemble-size"] = c.ensemble_size;
  j["dropout-rate"] = c.dropout_rate;
  j["prior"] = std::string(to_string(c.prior));
  j["prior-lambda"] = c.prior_lambda;
  j["hidden-layers"] = c.hidden_layers;
  j["activation"] = std::string(to_string(c.activation));
  j["bins"] = c.bins;
  j["mc-passes"] = c.mc_passes;
  j["ttda-copies"] = c.ttda_copies;
  j["ttda-fraction"] = c.ttda_fraction;
  j["clip-norm"] = c.clip_norm;
  j["standardize"] = c.standardize;
  return j;
}

TrainConfig config_from(const json& j, TrainConfig c) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "method") c.method = parse_method(v.get<std::string>());
    else if (key == "epochs") c.epochs = v.get<int>();
    else if (key == "batch-size") c.batch_size = v.get<int>();
    else if (key == "lr") c.lr0 = v.get<double>();
    else if (key == "lr-min") c.lr_min = v.get<double>();
    else if (key == "t0") c.schedule.t0 = v.get<double>();
    else if (key == "t-end") c.schedule.t_end = v.get<double>();
    else if (key == "anneal") {
      if (v.is_null()) c.anneal.reset();
      else c.anneal = AnnealPlan{channel_from(v.at("t2")), channel_from(v.at("t3"))};
    } else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "ensemble-size") c.ensemble_size = v.get<int>();
    else if (key == "dropout-rate") c.dropout_rate = v.get<double>();
    else if (key == "prior") c.prior = parse_weight_prior(v.get<std::string>());
    else if (key == "prior-lambda") c.prior_lambda = v.get<double>();
    else if (key == "hidden-layers") c.hidden_layers = v.get<std::vector<int>>();
    else if (key == "activation") c.activation = parse_activation(v.get<std::string>());
    else if (key == "bins") c.bins = v.get<int>();
    else if (key == "mc-passes") c.mc_passes = v.get<int>();
    else if (key == "ttda-copies") c.ttda_copies = v.get<int>();
    else if (key == "ttda-fraction") c.ttda_fraction = v.get<double>();
    else if (key == "clip-norm") c.clip_norm = v.get<double>();
    else if (key == "standardize") c.standardize = v.get<bool>();
    else throw UsageError("unknown config key '" + key + "'");
  }
  return c;
}

}  // namespace

std::string config_to_json(const TrainConfig& cfg) { return config_json(cfg).dump(2); }

TrainConfig config_from_json(std::string_view text, TrainConfig base) {
  try {
    return config_from(json::parse(text), std::move(base));
  } catch (const json::exception& e) {
    throw UsageError(std::string("malformed config: ") + e.what());
  }
}

// --- Experiments ----------------------------------------------------------

FittedMethod fit_method(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  dataset.validate();
  FittedMethod f;
  f.config = config;
  f.spec.input_dim = static_cast<int>(dataset.input_dim());
  f.spec.output_dim = static_cast<int>(dataset.output_dim());
  f.spec.hidden_layers = config.hidden_layers;
  f.spec.activation = config.activation;
  f.spec.dropout_rate = is_dropout(config.method) ? config.dropout_rate : 0.0;

  TrainOptions opt;
  opt.loss = loss_for(config.method);
  opt.epochs = config.epochs;
  opt.batch_size = config.batch_size;
  opt.lr0 = config.lr0;
  opt.lr_min = config.lr_min;
  opt.schedule = config.schedule;
  opt.anneal = config.effective_anneal();
  opt.prior = config.prior;
  opt.prior_lambda = config.prior_lambda;
  opt.clip_norm = config.clip_norm;
  opt.standardize = config.standardize;
  opt.uce_bins = config.bins;

  const int members = is_ensemble(config.method) ? config.ensemble_size : 1;
  for (int k = 0; k < members; ++k) {
    opt.seed = config.seed + static_cast<std::uint64_t>(k);
    TrainResult r = train(f.spec, dataset, opt);
    if (k == 0) f.trace = std::move(r.trace);
    f.members.push_back(std::move(r.params));
  }
  if (config.method == Method::kTtda) {
    f.ttda_sigma = config.ttda_fraction * train_input_std(dataset);
  }
  return f;
}

BatchPrediction predict_method(const FittedMethod& f, const Eigen::MatrixXd& inputs) {
  const Method m = f.config.method;
  if (is_ensemble(m)) return ensemble_predict(f.members, f.spec, inputs);
  if (is_dropout(m)) {
    return mc_dropout_predict(f.members.front(), f.spec, inputs, f.config.mc_passes,
                              f.config.seed ^ kMcDropoutSalt);
  }
  if (m == Method::kTtda) {
    return ttda_predict(f.members.front(), f.spec, inputs, f.config.ttda_copies, f.ttda_sigma,
                        f.config.seed ^ kTtdaSalt);
  }
  return predict_batch(f.members.front(), f.spec, inputs);
}

namespace {

EvalBatch eval_split(const FittedMethod& f, const Dataset& ds, Split s) {
  const Dataset part = ds.subset(s);
  if (part.rows() == 0) throw DataError("dataset has no " + std::string(to_string(s)) + " rows");
  const BatchPrediction p = predict_method(f, part.inputs);
  return EvalBatch(p.mean, p.sigma, part.targets);
}

}  // namespace

MetricsReport evaluate_method(const FittedMethod& fitted, const Dataset& dataset) {
  return evaluate_all(eval_split(fitted, dataset, Split::kTest),
                      eval_split(fitted, dataset, Split::kVal), fitted.config.bins);
}

ExperimentReport run_experiment(const Dataset& dataset, const TrainConfig& config,
                                std::string dataset_name) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport r;
  r.dataset = std::move(dataset_name);
  r.config = config;
  const FittedMethod fitted = fit_method(dataset, config);
  r.trace = fitted.trace;
  r.metrics = evaluate_method(fitted, dataset);
  r.epochs_to_converge = epochs_to_converge(r.trace);
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

int epochs_to_converge(const TrainingTrace& trace, double rel_delta, int patience) {
  if (trace.empty()) throw UsageError("epochs_to_converge: empty trace");
  if (!(rel_delta > 0.0)) throw UsageError("epochs_to_converge: rel_delta must be > 0");
  if (patience < 1) throw UsageError("epochs_to_converge: patience must be >= 1");
  double best = trace.front().val_mae;
  for (const auto& r : trace) best = std::min(best, r.val_mae);
  const double band = (1.0 + rel_delta) * best;
  const std::size_t n = trace.size();
  // run[i]: number of consecutive in-band epochs starting at i.
  std::vector<std::size_t> run(n + 1, 0);
  for (std::size_t i = n; i-- > 0;) run[i] = trace[i].val_mae <= band ? run[i + 1] + 1 : 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t need = std::min<std::size_t>(static_cast<std::size_t>(patience), n - i);
    if (run[i] >= need) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(n);
}

std::vector<AblationRow> ablation_rows(const TrainConfig& base) {
  using C = TemperatureChannel;
  const double t0 = 100.0;
  struct Def {
    const char* label;
    AnnealPlan plan;
    WeightPrior prior;
  };
  const Def defs[] = {
      {"T2=0,T3=0", AnnealPlan::frozen(0.0, 0.0), WeightPrior::kUniform},
      {"T2=10,T3=10", AnnealPlan::frozen(10.0, 10.0), WeightPrior::kUniform},
      {"T2=100,T3=0", AnnealPlan::frozen(t0, 0.0), WeightPrior::kUniform},
      {"T2=0,T3=100", AnnealPlan::frozen(0.0, t0), WeightPrior::kUniform},
      {"T2=100v,T3=0", {C::annealed(t0), C::fixed(0.0)}, WeightPrior::kUniform},
      {"T2=0,T3=100v", {C::fixed(0.0), C::annealed(t0)}, WeightPrior::kUniform},
      {"T2=100v,T3=100v", AnnealPlan::coupled(t0), WeightPrior::kUniform},
      {"T2=100v,T3=100v,gaussian", AnnealPlan::coupled(t0), WeightPrior::kGaussian},
      {"T2=100v,T3=100v,laplace", AnnealPlan::coupled(t0), WeightPrior::kLaplace},
  };
  std::vector<AblationRow> rows;
  for (const Def& d : defs) {
    AblationRow row;
    row.label = d.label;
    row.config = base;
    row.config.method = Method::kLika;
    row.config.anneal = d.plan;
    row.config.prior = d.prior;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AblationRow> ablation_grid(const Dataset& dataset, const TrainConfig& base,
                                       int threads) {
  std::vector<AblationRow> rows = ablation_rows(base);
  auto results = parallel_map<AblationRow>(rows.size(), threads, [&](std::size_t i) {
    AblationRow row = rows[i];
    try {
      row.report = run_experiment(dataset, row.config, "ablation");
    } catch (const Error& e) {
      row.error = e.what();
    }
    return row;
  });
  return results;
}

double median(std::vector<double> v) {
  if (v.empty()) throw UsageError("median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<OodCell> ood_sweep(const Dataset& dataset, const std::vector<TrainConfig>& configs,
                               const std::vector<std::uint64_t>& seeds, int threads) {
  if (configs.empty()) throw UsageError("ood_sweep: no configs");
  if (seeds.empty()) throw UsageError("ood_sweep: no seeds");
  constexpr NoiseLevel kLevels[] = {NoiseLevel::kNL0, NoiseLevel::kNL1, NoiseLevel::kNL2};
  struct Job {
    std::size_t config;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({c, s});
  }
  using LevelMetrics = std::array<MetricsReport, 3>;
  const auto results = parallel_map<LevelMetrics>(jobs.size(), threads, [&](std::size_t i) {
    TrainConfig cfg = configs[jobs[i].config];
    cfg.seed = seeds[jobs[i].seed];
    const FittedMethod fitted = fit_method(dataset, cfg);
    LevelMetrics out;
    for (std::size_t l = 0; l < 3; ++l) {
      const Dataset noisy = corrupt(dataset, kLevels[l], cfg.seed ^ kCorruptSalt);
      out[l] = evaluate_method(fitted, noisy);
    }
    return out;
  });

  std::vector<OodCell> cells;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::size_t l = 0; l < 3; ++l) {
      OodCell cell;
      cell.method = configs[c].method;
      cell.level = kLevels[l];
      for (std::size_t s = 0; s < seeds.size(); ++s) {
        const auto& m = results[c * seeds.size() + s][l];
        cell.mae.push_back(m.mae);
        cell.uce.push_back(m.uce);
      }
      cell.median_mae = median(cell.mae);
      cell.median_uce = median(cell.uce);
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

// --- Report I/O -----------------------------------------------------------

std::string summary_csv_header() {
  std::string out;
  for (const char* c : kSummaryColumns) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out;
}

std::string summary_csv_row(const ExperimentReport& r) {
  const MetricsReport& m = r.metrics;
  std::string out = std::string(to_string(r.config.method)) + ',' + r.dataset + ',' +
                    std::to_string(r.config.seed);
  for (double v : {m.mae, m.mse, m.psnr, m.corr_coeff, m.uce, m.r_uce, m.ece, m.sharpness,
                   m.log_likelihood}) {
    out += ',' + fmt(v);
  }
  return out;
}

std::string trace_csv(const TrainingTrace& trace) {
  std::string out = "epoch,lr,t2,t3,train_loss,val_loss,val_mae,val_uce,val_ece\n";
  for (const auto& r : trace) {
    out += std::to_string(r.epoch);
    for (double v : {r.lr, r.t2, r.t3, r.train_loss, r.val_loss, r.val_mae, r.val_uce,
                     r.val_ece}) {
      out += ',' + fmt(v);
    }
    out += '\n';
  }
  return out;
}

std::string report_to_json(const ExperimentReport& r) {
  const MetricsReport& m = r.metrics;
  json j;
  j["method"] = std::string(to_string(r.config.method));
  j["dataset"] = r.dataset;
  j["seed"] = r.config.seed;
  j["mae"] = m.mae;
  j["mse"] = m.mse;
  j["psnr"] = m.psnr;
  j["corr_coeff"] = m.corr_coeff;
  j["uce"] = m.uce;
  j["r_uce"] = m.r_uce;
  j["ece"] = m.ece;
  j["sharpness"] = m.sharpness;
  j["log_likelihood"] = m.log_likelihood;
  j["epochs_to_converge"] = r.epochs_to_converge;
  j["config"] = config_json(r.config);
  json trace = json::array();
  for (const auto& e : r.trace) {
    trace.push_back(json{{"epoch", e.epoch},
                         {"lr", e.lr},
                         {"t2", e.t2},
                         {"t3", e.t3},
                         {"train_loss", e.train_loss},
                         {"val_loss", e.val_loss},
                         {"val_mae", e.val_mae},
                         {"val_uce", e.val_uce},
                         {"val_ece", e.val_ece}});
  }
  j["trace"] = std::move(trace);
  return j.dump(2) + "\n";
}

ExperimentReport report_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ExperimentReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.config = config_from(j.at("config"), TrainConfig{});
    MetricsReport& m = r.metrics;
    m.mae = j.at("mae").get<double>();
    m.mse = j.at("mse").get<double>();
    m.psnr = j.at("psnr").get<double>();
    m.corr_coeff = j.at("corr_coeff").get<double>();
    m.uce = j.at("uce").get<double>();
    m.r_uce = j.at("r_uce").get<double>();
    m.ece = j.at("ece").get<double>();
    m.sharpness = j.at("sharpness").get<double>();
    m.log_likelihood = j.at("log_likelihood").get<double>();
    r.epochs_to_converge = j.at("epochs_to_converge").get<int>();
    for (const auto& e : j.at("trace")) {
      EpochRecord rec;
      rec.epoch = e.at("epoch").get<int>();
      rec.lr = e.at("lr").get<double>();
      rec.t2 = e.at("t2").get<double>();
      rec.t3 = e.at("t3").get<double>();
      rec.train_loss = e.at("train_loss").get<double>();
      rec.val_loss = e.at("val_loss").get<double>();
      rec.val_mae = e.at("val_mae").get<double>();
      rec.val_uce = e.at("val_uce").get<double>();
      rec.val_ece = e.at("val_ece").get<double>();
      r.trace.push_back(rec);
    }
    return r;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_run(const ExperimentReport& r, const std::filesystem::path& dir) {
  write_text(dir / "trace.csv", trace_csv(r.trace));
  write_text(dir / "report.json", report_to_json(r));
}

}  // namespace lika
