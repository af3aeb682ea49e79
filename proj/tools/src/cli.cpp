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

#include "cli.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "emit.hpp"
#include "lika/error.hpp"
#include "lika/harness.hpp"

namespace lika::cli {
namespace {

namespace fs = std::filesystem;

struct Flags {
  std::optional<std::string> method;
  std::optional<std::string> data;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> lr;
  std::optional<double> t0;
  std::optional<double> t_end;
  std::optional<std::uint64_t> seed;
  std::optional<int> bins;
  std::optional<int> ensemble_size;
  std::optional<double> dropout_rate;
  std::optional<std::string> prior;
  std::optional<double> prior_lambda;
  std::string out_dir = ".";
  std::optional<std::string> config;
  std::optional<std::string> format;
  std::vector<std::string> targets;
  std::optional<std::string> run_dir;
  int threads = 1;
  int seeds = 5;
  int samples = 3000;
  int n = 2000;
  double noise = -1.0;
  std::vector<std::string> inputs;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--seed", f.seed, "Random seed (falls back to LIKA_SEED)");
  app->add_option("--out-dir", f.out_dir, "Output directory")->capture_default_str();
}

void add_training(CLI::App* app, Flags& f) {
  app->add_option("--data", f.data, "Dataset CSV")->required();
  app->add_option("--target", f.targets, "Target column(s) of a generic CSV");
  app->add_option("--config", f.config, "JSON config file");
  app->add_option("--epochs", f.epochs);
  app->add_option("--batch-size", f.batch_size);
  app->add_option("--lr", f.lr, "Initial learning rate");
  app->add_option("--t0", f.t0, "Initial temperature");
  app->add_option("--t-end", f.t_end, "Final temperature");
  app->add_option("--bins", f.bins, "UCE bins");
  app->add_option("--ensemble-size", f.ensemble_size);
  app->add_option("--dropout-rate", f.dropout_rate);
  app->add_option("--prior", f.prior, "uniform, gaussian or laplace");
  app->add_option("--prior-lambda", f.prior_lambda);
  app->add_option("--format", f.format, "csv, json, markdown or svg");
  add_common(app, f);
}

std::optional<std::uint64_t> env_seed() {
  const char* v = std::getenv("LIKA_SEED");
  if (v == nullptr || *v == '\0') return std::nullopt;
  std::uint64_t out = 0;
  const std::string s(v);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw UsageError("LIKA_SEED is not an unsigned integer: '" + s + "'");
  }
  return out;
}

std::uint64_t base_seed(const Flags& f) {
  if (f.seed) return *f.seed;
  return env_seed().value_or(0);
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_method(item));
  }
  if (out.empty()) throw UsageError("--method is empty (allowed: " + method_names() + ")");
  return out;
}

/// Defaults, then LIKA_SEED, then the config file, then explicit flags.
TrainConfig build_config(const Flags& f) {
  TrainConfig cfg;
  if (auto s = env_seed()) cfg.seed = *s;
  if (f.config) {
    std::string text;
    try {
      text = read_text(*f.config);
    } catch (const DataError&) {
      throw UsageError("cannot read config file '" + *f.config + "'");
    }
    cfg = config_from_json(text, cfg);
  }
  if (f.epochs) cfg.epochs = *f.epochs;
  if (f.batch_size) cfg.batch_size = *f.batch_size;
  if (f.lr) cfg.lr0 = *f.lr;
  if (f.t0) cfg.schedule.t0 = *f.t0;
  if (f.t_end) cfg.schedule.t_end = *f.t_end;
  if (f.seed) cfg.seed = *f.seed;
  if (f.bins) cfg.bins = *f.bins;
  if (f.ensemble_size) cfg.ensemble_size = *f.ensemble_size;
  if (f.dropout_rate) cfg.dropout_rate = *f.dropout_rate;
  if (f.prior) cfg.prior = parse_weight_prior(*f.prior);
  if (f.prior_lambda) cfg.prior_lambda = *f.prior_lambda;
  if (f.method) cfg.method = parse_methods(*f.method).front();
  cfg.validate();
  return cfg;
}

Dataset load_dataset(const Flags& f, std::uint64_t seed) {
  const fs::path path = *f.data;
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  static const std::regex native("^([xys][0-9]+)(,[xys][0-9]+)*$");
  if (std::regex_match(header, native)) return read_dataset_csv(path, seed);
  if (f.targets.empty()) {
    throw UsageError("'" + path.string() + "' is a generic CSV; name targets with --target");
  }
  CsvOptions opts;
  opts.target_columns = f.targets;
  opts.normalize = true;
  opts.seed = seed;
  return load_csv(path, opts);
}

std::string dataset_name(const Flags& f) { return fs::path(*f.data).stem().string(); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create output directory '" + dir.string() + "'");
  }
}

std::vector<Format> formats(const Flags& f, std::vector<Format> fallback) {
  if (f.format) return {parse_format(*f.format)};
  return fallback;
}

void emit_all(const std::vector<ExperimentReport>& reports, const Flags& f,
              std::vector<Format> fallback) {
  for (Format fmt : formats(f, std::move(fallback))) emit_report(reports, fmt, f.out_dir);
}

std::string sanitize(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return s;
}

// --- verbs ----------------------------------------------------------------

int cmd_gen_synth(const Flags& f) {
  ensure_dir(f.out_dir);
  const Dataset ds = generate_synthetic(f.n, base_seed(f), f.noise < 0.0 ? 1.0 : f.noise);
  const fs::path out = fs::path(f.out_dir) / "synth.csv";
  write_dataset_csv(ds, out);
  std::cout << out.string() << '\n';
  return 0;
}

int cmd_gen_lorenz(const Flags& f) {
  ensure_dir(f.out_dir);
  LorenzConfig cfg;
  cfg.samples = f.samples;
  cfg.seed = base_seed(f);
  if (f.noise >= 0.0) cfg.noise_sigma = f.noise;
  const Dataset ds = generate_lorenz(cfg);
  const fs::path out = fs::path(f.out_dir) / "lorenz.csv";
  write_dataset_csv(ds, out);
  std::cout << out.string() << '\n';
  return 0;
}

void save_fitted(const FittedMethod& fitted, const fs::path& dir) {
  for (std::size_t k = 0; k < fitted.members.size(); ++k) {
    save_checkpoint(dir / ("model-" + std::to_string(k) + ".json"), fitted.spec,
                    fitted.members[k]);
  }
}

int cmd_train(const Flags& f) {
  const TrainConfig base = build_config(f);
  const std::vector<Method> methods =
      f.method ? parse_methods(*f.method) : std::vector<Method>{base.method};
  const Dataset ds = load_dataset(f, base.seed);
  ensure_dir(f.out_dir);
  std::vector<ExperimentReport> reports;
  for (Method m : methods) {
    TrainConfig cfg = base;
    cfg.method = m;
    cfg.validate();
    const fs::path dir =
        methods.size() == 1 ? fs::path(f.out_dir) : fs::path(f.out_dir) / std::string(to_string(m));
    ExperimentReport r;
    r.dataset = dataset_name(f);
    r.config = cfg;
    FittedMethod fitted;
    try {
      fitted = fit_method(ds, cfg);
    } catch (const TrainingError& e) {
      r.trace = e.trace();
      write_text(dir / "trace.csv", trace_csv(r.trace));
      throw;
    }
    r.trace = fitted.trace;
    r.metrics = evaluate_method(fitted, ds);
    r.epochs_to_converge = epochs_to_converge(r.trace);
    write_run(r, dir);
    save_fitted(fitted, dir);
    std::cerr << to_string(m) << ": mae " << r.metrics.mae << " uce " << r.metrics.uce
              << " converged at epoch " << r.epochs_to_converge << '\n';
    reports.push_back(std::move(r));
  }
  emit_all(reports, f, {Format::kCsv});
  return 0;
}

int cmd_eval(const Flags& f) {
  const fs::path run = *f.run_dir;
  ExperimentReport r = report_from_json(read_text(run / "report.json"));
  const Dataset ds = load_dataset(f, r.config.seed);
  FittedMethod fitted;
  fitted.config = r.config;
  fitted.trace = r.trace;
  for (int k = 0;; ++k) {
    const fs::path p = run / ("model-" + std::to_string(k) + ".json");
    if (!fs::exists(p)) break;
    auto [spec, params] = load_checkpoint(p);
    fitted.spec = spec;
    fitted.members.push_back(std::move(params));
  }
  if (fitted.members.empty()) throw DataError("no model checkpoints in '" + run.string() + "'");
  if (fitted.spec.input_dim != ds.input_dim() || fitted.spec.output_dim != ds.output_dim()) {
    throw DataError("dataset shape does not match the checkpoint");
  }
  if (r.config.method == Method::kTtda) {
    fitted.ttda_sigma = r.config.ttda_fraction * train_input_std(ds);
  }
  r.dataset = dataset_name(f);
  r.metrics = evaluate_method(fitted, ds);
  ensure_dir(f.out_dir);
  write_text(fs::path(f.out_dir) / "report.json", report_to_json(r));
  emit_all({r}, f, {Format::kCsv});
  return 0;
}

int cmd_ablate(const Flags& f) {
  TrainConfig base = build_config(f);
  base.method = f.method ? parse_methods(*f.method).front() : Method::kLika;
  const Dataset ds = load_dataset(f, base.seed);
  ensure_dir(f.out_dir);
  const auto rows = ablation_grid(ds, base, f.threads);
  std::string table = "label," + summary_csv_header() + ",error\n";
  std::string md = "| configuration | mae | uce | ece | epochs_to_converge |\n|---|---:|---:|---:|---:|\n";
  std::vector<ExperimentReport> reports;
  int failures = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.report) {
      const ExperimentReport& r = *row.report;
      write_run(r, fs::path(f.out_dir) / (std::to_string(i) + '_' + sanitize(row.label)));
      table += '"' + row.label + "\"," + summary_csv_row(r) + ",\n";
      std::ostringstream line;
      line << "| " << row.label << " | " << r.metrics.mae << " | " << r.metrics.uce << " | "
           << r.metrics.ece << " | " << r.epochs_to_converge << " |\n";
      md += line.str();
      reports.push_back(r);
    } else {
      ++failures;
      table += '"' + row.label + "\"," + std::string(to_string(row.config.method)) + ",,,,,,,,,,,\"" +
               row.error + "\"\n";
      md += "| " + row.label + " | failed | | | |\n";
    }
  }
  write_text(fs::path(f.out_dir) / "ablation.csv", table);
  write_text(fs::path(f.out_dir) / "ablation.md", md);
  if (!reports.empty()) emit_all(reports, f, {Format::kCsv});
  return failures == 0 ? 0 : static_cast<int>(ExitCode::kNumeric);
}

int cmd_ood(const Flags& f) {
  const TrainConfig base = build_config(f);
  const std::vector<Method> methods = parse_methods(f.method.value_or("nll,lika"));
  if (f.seeds < 1) throw UsageError("--seeds must be >= 1");
  const Dataset ds = load_dataset(f, base.seed);
  ensure_dir(f.out_dir);
  std::vector<TrainConfig> configs;
  for (Method m : methods) {
    TrainConfig c = base;
    c.method = m;
    c.validate();
    configs.push_back(c);
  }
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < f.seeds; ++k) seeds.push_back(base.seed + static_cast<std::uint64_t>(k));
  const auto cells = ood_sweep(ds, configs, seeds, f.threads);
  std::string csv = "method,level,median_mae,median_uce\n";
  std::string md = "| method | level | median_mae | median_uce |\n|---|---|---:|---:|\n";
  for (const auto& c : cells) {
    std::ostringstream a, b;
    a.precision(17);
    a << to_string(c.method) << ',' << to_string(c.level) << ',' << c.median_mae << ','
      << c.median_uce << '\n';
    b << "| " << to_string(c.method) << " | " << to_string(c.level) << " | " << c.median_mae
      << " | " << c.median_uce << " |\n";
    csv += a.str();
    md += b.str();
  }
  write_text(fs::path(f.out_dir) / "ood.csv", csv);
  write_text(fs::path(f.out_dir) / "ood.md", md);
  return 0;
}

int cmd_report(const Flags& f) {
  std::vector<ExperimentReport> reports;
  for (const auto& in : f.inputs) {
    fs::path p = in;
    if (fs::is_directory(p)) p /= "report.json";
    reports.push_back(report_from_json(read_text(p)));
  }
  if (reports.empty()) throw UsageError("report: no inputs");
  emit_all(reports, f, {Format::kCsv, Format::kJson, Format::kMarkdown, Format::kSvg});
  return 0;
}

int run(const std::vector<std::string>& args) {
  CLI::App app{"Calibrated heteroscedastic regression experiments", "lika"};
  app.require_subcommand(1, 1);
  Flags f;

  auto* gs = app.add_subcommand("gen-synth", "Generate the synthetic heteroscedastic dataset");
  gs->add_option("--n", f.n, "Number of samples")->capture_default_str();
  gs->add_option("--noise", f.noise, "Noise scale multiplier");
  add_common(gs, f);

  auto* gl = app.add_subcommand("gen-lorenz", "Generate the Lorenz denoising dataset");
  gl->add_option("--samples", f.samples, "Trajectory samples")->capture_default_str();
  gl->add_option("--noise", f.noise, "Observation noise sigma");
  add_common(gl, f);

  auto* tr = app.add_subcommand("train", "Train and evaluate one or more methods");
  tr->add_option("--method", f.method, "Method or comma-separated list");
  add_training(tr, f);

  auto* ev = app.add_subcommand("eval", "Evaluate a trained run on a dataset");
  ev->add_option("--run-dir", f.run_dir, "Directory written by train")->required();
  ev->add_option("--data", f.data, "Dataset CSV")->required();
  ev->add_option("--target", f.targets, "Target column(s) of a generic CSV");
  ev->add_option("--format", f.format, "csv, json, markdown or svg");
  add_common(ev, f);

  auto* ab = app.add_subcommand("ablate", "Temperature and prior ablation grid");
  ab->add_option("--method", f.method, "lika, lika-norm or lika-exact");
  ab->add_option("--threads", f.threads)->capture_default_str();
  add_training(ab, f);

  auto* od = app.add_subcommand("ood", "Input-noise robustness sweep");
  od->add_option("--method", f.method, "Comma-separated methods (default nll,lika)");
  od->add_option("--seeds", f.seeds, "Number of seeds")->capture_default_str();
  od->add_option("--threads", f.threads)->capture_default_str();
  add_training(od, f);

  auto* rp = app.add_subcommand("report", "Render saved reports");
  rp->add_option("inputs", f.inputs, "report.json files or run directories")->required();
  rp->add_option("--format", f.format, "csv, json, markdown or svg (default: all)");
  rp->add_option("--out-dir", f.out_dir)->capture_default_str();

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  if (gs->parsed()) return cmd_gen_synth(f);
  if (gl->parsed()) return cmd_gen_lorenz(f);
  if (tr->parsed()) return cmd_train(f);
  if (ev->parsed()) return cmd_eval(f);
  if (ab->parsed()) return cmd_ablate(f);
  if (od->parsed()) return cmd_ood(f);
  return cmd_report(f);
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args) {
  try {
    return run(args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  }
}

int parse_and_dispatch(int argc, const char* const* argv) {
  return parse_and_dispatch(std::vector<std::string>(argv, argv + argc));
}

}  // namespace lika::cli
