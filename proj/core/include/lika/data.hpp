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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace lika {

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

std::string_view to_string(Split s);

/// Row-major sample table: inputs N x m, targets N x n, one split tag per row.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
  std::optional<Eigen::MatrixXd> true_sigma;
  std::vector<Split> split;

  Eigen::Index rows() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
  Eigen::Index output_dim() const { return targets.cols(); }

  std::vector<Eigen::Index> indices(Split s) const;
  /// Rows of one split, in original order.
  Dataset subset(Split s) const;
  /// Throws DataError on shape mismatch, non-finite values or N == 0.
  void validate() const;
};

/// Assigns the first 70% of `order` to train, the next 15% to validation and
/// the rest to test.
std::vector<Split> split_70_15_15(const std::vector<Eigen::Index>& order);

// --- Lorenz attractor ------------------------------------------------------

using Vec3 = std::array<double, 3>;

/// (10 (z2 - z1), z1 (28 - z3) - z2, z1 z2 - 8 z3 / 3).
Vec3 lorenz_rhs(const Vec3& z);
Vec3 euler_step(const Vec3& z, double dt);

struct LorenzConfig {
  double integration_step = 1e-5;
  double sample_step = 0.05;
  double noise_sigma = 0.5;
  int samples = 3000;
  double burn_in = 10.0;
  int window = 9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LorenzTrajectory {
  std::vector<Vec3> clean;
  std::vector<Vec3> noisy;
};

/// Euler-integrates from (1,1,1) + N(0, 0.1^2), discards the burn-in, then
/// records `samples` clean points every sample_step and adds i.i.d. noise.
LorenzTrajectory simulate_lorenz(const LorenzConfig& cfg);

/// Denoising dataset: each row's input is the flattened window of noisy
/// samples centred on a point, the target is the clean centre point. Splits
/// are chronological 70/15/15 with window - 1 centres dropped at each split
/// boundary so no noisy sample is shared across splits.
Dataset generate_lorenz(const LorenzConfig& cfg);

// --- Synthetic heteroscedastic 1-D task -----------------------------------

/// sigma(x) = noise_scale * (0.1 + 0.4 |x|).
double synthetic_sigma(double x, double noise_scale = 1.0);

/// x ~ U[-2, 2], y = sin(2x) + N(0, sigma(x)^2); random 70/15/15 split.
Dataset generate_synthetic(int n, std::uint64_t seed, double noise_scale = 1.0);

// --- CSV ------------------------------------------------------------------

struct CsvOptions {
  std::vector<std::string> target_columns;
  bool normalize = false;
  std::uint64_t seed = 0;
};

/// Generic numeric CSV with a header row. Non-target columns become inputs.
/// Splits come from a seeded shuffle. With `normalize`, inputs are z-scored
/// with train-split statistics.
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& opts);

/// Reads the native layout `x0..,y0..[,s0..]`. Splits come from the sidecar
/// manifest when present, otherwise from a shuffle seeded with `seed`.
Dataset read_dataset_csv(const std::filesystem::path& path, std::uint64_t seed = 0);
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);

/// `<stem>.splits.json` next to the CSV.
std::filesystem::path split_manifest_path(const std::filesystem::path& csv);

/// Z-scores inputs in place using train rows. Returns (mean, std) per column.
std::pair<Eigen::VectorXd, Eigen::VectorXd> normalize_inputs(Dataset& ds);

/// Per-column standard deviation of train-split inputs.
Eigen::VectorXd train_input_std(const Dataset& ds);

// --- Corruption -----------------------------------------------------------

enum class NoiseLevel { kNL0, kNL1, kNL2 };

std::string_view to_string(NoiseLevel level);
double noise_fraction(NoiseLevel level);

/// Adds N(0, (f * train_std_j)^2) to input column j of every row, f being
/// 0, 0.25 or 0.5. The same seed reuses the same standard normal draws at
/// every level. Targets are untouched.
Dataset corrupt(const Dataset& ds, NoiseLevel level, std::uint64_t seed);

}  // namespace lika
