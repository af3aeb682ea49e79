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

#include "lika/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lika/error.hpp"

namespace lika {

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "unknown";
}

std::vector<Eigen::Index> Dataset::indices(Split s) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (split[i] == s) out.push_back(static_cast<Eigen::Index>(i));
  }
  return out;
}

Dataset Dataset::subset(Split s) const {
  const auto idx = indices(s);
  const auto n = static_cast<Eigen::Index>(idx.size());
  Dataset out;
  out.inputs.resize(n, inputs.cols());
  out.targets.resize(n, targets.cols());
  if (true_sigma) out.true_sigma = Eigen::MatrixXd(n, targets.cols());
  for (Eigen::Index r = 0; r < n; ++r) {
    out.inputs.row(r) = inputs.row(idx[r]);
    out.targets.row(r) = targets.row(idx[r]);
    if (true_sigma) out.true_sigma->row(r) = true_sigma->row(idx[r]);
  }
  out.split.assign(idx.size(), s);
  return out;
}

void Dataset::validate() const {
  if (inputs.rows() < 1) throw DataError("dataset: no rows");
  if (targets.rows() != inputs.rows() ||
      static_cast<Eigen::Index>(split.size()) != inputs.rows()) {
    throw DataError("dataset: inconsistent row counts");
  }
  if (true_sigma && (true_sigma->rows() != targets.rows() ||
                     true_sigma->cols() != targets.cols())) {
    throw DataError("dataset: true_sigma shape mismatch");
  }
  if (!inputs.allFinite() || !targets.allFinite() ||
      (true_sigma && !true_sigma->allFinite())) {
    throw DataError("dataset: non-finite values");
  }
}

std::vector<Split> split_70_15_15(const std::vector<Eigen::Index>& order) {
  const std::size_t n = order.size();
  const auto n_train = static_cast<std::size_t>(std::llround(0.70 * n));
  const auto n_val = static_cast<std::size_t>(std::llround(0.15 * n));
  std::vector<Split> out(n, Split::kTest);
  for (std::size_t k = 0; k < n; ++k) {
    const auto row = static_cast<std::size_t>(order[k]);
    if (k < n_train) {
      out[row] = Split::kTrain;
    } else if (k < n_train + n_val) {
      out[row] = Split::kVal;
    }
  }
  return out;
}

namespace {

std::vector<Eigen::Index> shuffled_rows(Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

// --- Lorenz ---------------------------------------------------------------

Vec3 lorenz_rhs(const Vec3& z) {
  return {10.0 * (z[1] - z[0]), z[0] * (28.0 - z[2]) - z[1],
          z[0] * z[1] - 8.0 * z[2] / 3.0};
}

Vec3 euler_step(const Vec3& z, double dt) {
  const Vec3 d = lorenz_rhs(z);
  return {z[0] + dt * d[0], z[1] + dt * d[1], z[2] + dt * d[2]};
}

void LorenzConfig::validate() const {
  if (!(integration_step > 0.0) || !(integration_step < sample_step)) {
    throw UsageError("lorenz: need 0 < integration_step < sample_step");
  }
  if (window < 1) throw UsageError("lorenz: window must be >= 1");
  if (samples < window) throw UsageError("lorenz: fewer samples than window");
  if (noise_sigma < 0.0 || burn_in < 0.0) {
    throw UsageError("lorenz: negative noise_sigma or burn_in");
  }
}

LorenzTrajectory simulate_lorenz(const LorenzConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Vec3 z{1.0 + 0.1 * normal(rng), 1.0 + 0.1 * normal(rng), 1.0 + 0.1 * normal(rng)};
  const auto substeps =
      static_cast<long>(std::llround(cfg.sample_step / cfg.integration_step));
  const auto burn_steps =
      static_cast<long>(std::llround(cfg.burn_in / cfg.integration_step));
  const auto check = [](const Vec3& s) {
    if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2])) {
      throw NumericError("lorenz: state diverged during integration");
    }
  };
  for (long k = 0; k < burn_steps; ++k) z = euler_step(z, cfg.integration_step);
  check(z);

  LorenzTrajectory traj;
  traj.clean.reserve(static_cast<std::size_t>(cfg.samples));
  traj.noisy.reserve(static_cast<std::size_t>(cfg.samples));
  for (int s = 0; s < cfg.samples; ++s) {
    if (s > 0) {
      for (long k = 0; k < substeps; ++k) z = euler_step(z, cfg.integration_step);
      check(z);
    }
    traj.clean.push_back(z);
  }
  for (const Vec3& c : traj.clean) {
    Vec3 n = c;
    for (double& v : n) v += cfg.noise_sigma * normal(rng);
    traj.noisy.push_back(n);
  }
  return traj;
}

Dataset generate_lorenz(const LorenzConfig& cfg) {
  const LorenzTrajectory traj = simulate_lorenz(cfg);
  const int half = cfg.window / 2;
  const int first = half;
  const int last = cfg.samples - 1 - (cfg.window - 1 - half);
  const int n_centres = last - first + 1;
  const int gap = cfg.window - 1;
  if (n_centres - 2 * gap < 3) throw UsageError("lorenz: trajectory too short");

  // Chronological segments over the usable centres, then trim `gap` centres
  // before the val and test segments.
  const int usable = n_centres;
  const int train_end = first + static_cast<int>(std::llround(0.70 * usable));
  const int val_end = train_end + static_cast<int>(std::llround(0.15 * usable));

  std::vector<int> centres;
  std::vector<Split> tags;
  for (int c = first; c <= last; ++c) {
    if (c < train_end) {
      centres.push_back(c);
      tags.push_back(Split::kTrain);
    } else if (c < val_end) {
      if (c < train_end + gap) continue;
      centres.push_back(c);
      tags.push_back(Split::kVal);
    } else {
      if (c < val_end + gap) continue;
      centres.push_back(c);
      tags.push_back(Split::kTest);
    }
  }

  const auto n = static_cast<Eigen::Index>(centres.size());
  Dataset ds;
  ds.inputs.resize(n, 3 * cfg.window);
  ds.targets.resize(n, 3);
  ds.true_sigma = Eigen::MatrixXd::Constant(n, 3, cfg.noise_sigma);
  ds.split = std::move(tags);
  for (Eigen::Index r = 0; r < n; ++r) {
    const int c = centres[static_cast<std::size_t>(r)];
    for (int w = 0; w < cfg.window; ++w) {
      const Vec3& s = traj.noisy[static_cast<std::size_t>(c - half + w)];
      for (int d = 0; d < 3; ++d) ds.inputs(r, 3 * w + d) = s[d];
    }
    const Vec3& t = traj.clean[static_cast<std::size_t>(c)];
    for (int d = 0; d < 3; ++d) ds.targets(r, d) = t[d];
  }
  ds.validate();
  return ds;
}

// --- Synthetic ------------------------------------------------------------

double synthetic_sigma(double x, double noise_scale) {
  return noise_scale * (0.1 + 0.4 * std::abs(x));
}

Dataset generate_synthetic(int n, std::uint64_t seed, double noise_scale) {
  if (n < 10) throw UsageError("generate_synthetic: n must be >= 10");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.inputs.resize(n, 1);
  ds.targets.resize(n, 1);
  ds.true_sigma = Eigen::MatrixXd(n, 1);
  for (int i = 0; i < n; ++i) {
    const double x = uniform(rng);
    const double s = synthetic_sigma(x, noise_scale);
    ds.inputs(i, 0) = x;
    ds.targets(i, 0) = std::sin(2.0 * x) + s * normal(rng);
    (*ds.true_sigma)(i, 0) = s;
  }
  ds.split = split_70_15_15(shuffled_rows(n, seed ^ 0x9e3779b97f4a7c15ULL));
  ds.validate();
  return ds;
}

// --- CSV ------------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

struct RawTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

RawTable read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  RawTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path.string() + "' is empty");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  t.header = split_line(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(t.rows.size() + 1) +
                      " (line " + std::to_string(line_no) + ") has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(t.header.size()));
    }
    std::vector<double> values(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& s = cells[c];
      const char* begin = s.data();
      const char* end = s.data() + s.size();
      if (!s.empty() && *begin == '+') ++begin;
      const auto [ptr, ec] = std::from_chars(begin, end, values[c]);
      if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(values[c])) {
        throw DataError(path.string() + ": non-numeric cell '" + s + "' at row " +
                        std::to_string(t.rows.size() + 1) + ", column " +
                        std::to_string(c + 1) + " ('" + t.header[c] + "')");
      }
    }
    t.rows.push_back(std::move(values));
  }
  if (t.rows.empty()) throw DataError("'" + path.string() + "' has no data rows");
  return t;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_indexed(const std::string& name, char prefix) {
  return name.size() >= 2 && name[0] == prefix &&
         std::all_of(name.begin() + 1, name.end(),
                     [](char ch) { return ch >= '0' && ch <= '9'; });
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> normalize_inputs(Dataset& ds) {
  const auto train = ds.indices(Split::kTrain);
  if (train.empty()) throw DataError("normalize: no train rows");
  const Eigen::Index m = ds.inputs.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sd = Eigen::VectorXd::Zero(m);
  for (auto r : train) mean += ds.inputs.row(r).transpose();
  mean /= static_cast<double>(train.size());
  for (auto r : train) sd += (ds.inputs.row(r).transpose() - mean).array().square().matrix();
  sd = (sd / static_cast<double>(train.size())).array().sqrt().matrix();
  for (Eigen::Index c = 0; c < m; ++c) {
    if (sd(c) == 0.0) sd(c) = 1.0;
  }
  for (Eigen::Index r = 0; r < ds.inputs.rows(); ++r) {
    ds.inputs.row(r) =
        ((ds.inputs.row(r).transpose() - mean).array() / sd.array()).matrix().transpose();
  }
  return {mean, sd};
}

Eigen::VectorXd train_input_std(const Dataset& ds) {
  const auto train = ds.indices(Split::kTrain);
  if (train.empty()) throw DataError("train_input_std: no train rows");
  const Eigen::Index m = ds.inputs.cols();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(m);
  for (auto r : train) mean += ds.inputs.row(r).transpose();
  mean /= static_cast<double>(train.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(m);
  for (auto r : train) var += (ds.inputs.row(r).transpose() - mean).array().square().matrix();
  return (var / static_cast<double>(train.size())).array().sqrt().matrix();
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  const RawTable t = read_table(path);
  if (opts.target_columns.empty()) throw UsageError("load_csv: no target columns given");
  std::vector<std::size_t> target_idx;
  for (const auto& name : opts.target_columns) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) {
      throw DataError(path.string() + ": target column '" + name + "' not found");
    }
    target_idx.push_back(static_cast<std::size_t>(it - t.header.begin()));
  }
  std::vector<std::size_t> input_idx;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (std::find(target_idx.begin(), target_idx.end(), c) == target_idx.end()) {
      input_idx.push_back(c);
    }
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Dataset ds;
  ds.inputs.resize(n, static_cast<Eigen::Index>(input_idx.size()));
  ds.targets.resize(n, static_cast<Eigen::Index>(target_idx.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < input_idx.size(); ++c) ds.inputs(r, c) = row[input_idx[c]];
    for (std::size_t c = 0; c < target_idx.size(); ++c) ds.targets(r, c) = row[target_idx[c]];
  }
  ds.split = split_70_15_15(shuffled_rows(n, opts.seed));
  if (opts.normalize) normalize_inputs(ds);
  ds.validate();
  return ds;
}

std::filesystem::path split_manifest_path(const std::filesystem::path& csv) {
  auto p = csv;
  p.replace_extension(".splits.json");
  return p;
}

Dataset read_dataset_csv(const std::filesystem::path& path, std::uint64_t seed) {
  const RawTable t = read_table(path);
  std::vector<std::size_t> xs, ys, ss;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    const auto& h = t.header[c];
    if (is_indexed(h, 'x')) xs.push_back(c);
    else if (is_indexed(h, 'y')) ys.push_back(c);
    else if (is_indexed(h, 's')) ss.push_back(c);
    else throw DataError(path.string() + ": unexpected column '" + h + "'");
  }
  if (xs.empty() || ys.empty()) {
    throw DataError(path.string() + ": header needs x* and y* columns");
  }
  if (!ss.empty() && ss.size() != ys.size()) {
    throw DataError(path.string() + ": s* columns must match y* columns");
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  Dataset ds;
  ds.inputs.resize(n, static_cast<Eigen::Index>(xs.size()));
  ds.targets.resize(n, static_cast<Eigen::Index>(ys.size()));
  if (!ss.empty()) ds.true_sigma = Eigen::MatrixXd(n, static_cast<Eigen::Index>(ss.size()));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    for (std::size_t c = 0; c < xs.size(); ++c) ds.inputs(r, c) = row[xs[c]];
    for (std::size_t c = 0; c < ys.size(); ++c) ds.targets(r, c) = row[ys[c]];
    for (std::size_t c = 0; c < ss.size(); ++c) (*ds.true_sigma)(r, c) = row[ss[c]];
  }

  const auto manifest = split_manifest_path(path);
  if (std::filesystem::exists(manifest)) {
    std::ifstream in(manifest);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw DataError(manifest.string() + ": " + e.what());
    }
    std::vector<int> seen(static_cast<std::size_t>(n), 0);
    ds.split.assign(static_cast<std::size_t>(n), Split::kTrain);
    for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
      const std::string key(to_string(s));
      if (!j.contains(key)) throw DataError(manifest.string() + ": missing '" + key + "'");
      for (const auto& v : j.at(key)) {
        const auto r = v.get<long long>();
        if (r < 0 || r >= n) throw DataError(manifest.string() + ": row index out of range");
        ++seen[static_cast<std::size_t>(r)];
        ds.split[static_cast<std::size_t>(r)] = s;
      }
    }
    if (std::any_of(seen.begin(), seen.end(), [](int k) { return k != 1; })) {
      throw DataError(manifest.string() + ": splits must partition the rows");
    }
  } else {
    ds.split = split_70_15_15(shuffled_rows(n, seed));
  }
  ds.validate();
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  std::string line;
  for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) line += (c ? ",x" : "x") + std::to_string(c);
  for (Eigen::Index c = 0; c < ds.targets.cols(); ++c) line += ",y" + std::to_string(c);
  if (ds.true_sigma) {
    for (Eigen::Index c = 0; c < ds.targets.cols(); ++c) line += ",s" + std::to_string(c);
  }
  out << line << '\n';
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    line.clear();
    for (Eigen::Index c = 0; c < ds.inputs.cols(); ++c) {
      if (c) line += ',';
      line += format_double(ds.inputs(r, c));
    }
    for (Eigen::Index c = 0; c < ds.targets.cols(); ++c) line += ',' + format_double(ds.targets(r, c));
    if (ds.true_sigma) {
      for (Eigen::Index c = 0; c < ds.targets.cols(); ++c) {
        line += ',' + format_double((*ds.true_sigma)(r, c));
      }
    }
    out << line << '\n';
  }
  if (!out) throw DataError("failed writing '" + path.string() + "'");

  nlohmann::json j;
  for (Split s : {Split::kTrain, Split::kVal, Split::kTest}) {
    j[std::string(to_string(s))] = ds.indices(s);
  }
  std::ofstream side(split_manifest_path(path));
  if (!side) throw DataError("cannot write split manifest for '" + path.string() + "'");
  side << j.dump() << '\n';
}

// --- Corruption -----------------------------------------------------------

std::string_view to_string(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::kNL0: return "NL0";
    case NoiseLevel::kNL1: return "NL1";
    case NoiseLevel::kNL2: return "NL2";
  }
  return "unknown";
}

double noise_fraction(NoiseLevel level) {
  switch (level) {
    case NoiseLevel::kNL0: return 0.0;
    case NoiseLevel::kNL1: return 0.25;
    case NoiseLevel::kNL2: return 0.5;
  }
  return 0.0;
}

Dataset corrupt(const Dataset& ds, NoiseLevel level, std::uint64_t seed) {
  ds.validate();
  Dataset out = ds;
  if (level == NoiseLevel::kNL0) return out;
  const Eigen::VectorXd sd = train_input_std(ds);
  const double f = noise_fraction(level);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < out.inputs.rows(); ++r) {
    for (Eigen::Index c = 0; c < out.inputs.cols(); ++c) {
      out.inputs(r, c) += f * sd(c) * normal(rng);
    }
  }
  return out;
}

}  // namespace lika
