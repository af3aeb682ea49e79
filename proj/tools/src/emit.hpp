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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lika/harness.hpp"

namespace lika::cli {

enum class Format { kCsv, kJson, kMarkdown, kSvg };

std::string_view to_string(Format f);
Format parse_format(std::string_view name);

/// Summary header plus one row per report.
std::string render_csv(const std::vector<ExperimentReport>& reports);
/// JSON array of report objects.
std::string render_json(const std::vector<ExperimentReport>& reports);
/// One table row per (method, dataset).
std::string render_markdown(const std::vector<ExperimentReport>& reports);

enum class Curve { kValLoss, kValEce };

/// Line chart of one trace column versus epoch, one polyline per report.
std::string render_svg(const std::vector<ExperimentReport>& reports, Curve curve);

/// Writes the files for `format` into `dir` and returns their paths:
/// summary.csv, reports.json, summary.md, or val_loss.svg + val_ece.svg.
std::vector<std::filesystem::path> emit_report(const std::vector<ExperimentReport>& reports,
                                               Format format,
                                               const std::filesystem::path& dir);

}  // namespace lika::cli
