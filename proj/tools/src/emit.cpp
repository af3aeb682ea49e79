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

#include "emit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "lika/error.hpp"

namespace lika::cli {
namespace {

std::string num(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string_view to_string(Format f) {
  switch (f) {
    case Format::kCsv: return "csv";
    case Format::kJson: return "json";
    case Format::kMarkdown: return "markdown";
    case Format::kSvg: return "svg";
  }
  return "?";
}

Format parse_format(std::string_view name) {
  for (Format f : {Format::kCsv, Format::kJson, Format::kMarkdown, Format::kSvg}) {
    if (name == to_string(f)) return f;
  }
  throw UsageError("unknown format '" + std::string(name) + "' (allowed: csv, json, markdown, svg)");
}

std::string render_csv(const std::vector<ExperimentReport>& reports) {
  std::string out = summary_csv_header() + '\n';
  for (const auto& r : reports) out += summary_csv_row(r) + '\n';
  return out;
}

std::string render_json(const std::vector<ExperimentReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(nlohmann::ordered_json::parse(report_to_json(r)));
  return arr.dump(2) + '\n';
}

std::string render_markdown(const std::vector<ExperimentReport>& reports) {
  std::string out;
  for (const char* c : kSummaryColumns) out += std::string("| ") + c + ' ';
  out += "|\n";
  for (std::size_t i = 0; i < std::size(kSummaryColumns); ++i) out += i < 3 ? "|---" : "|---:";
  out += "|\n";
  for (const auto& r : reports) {
    const MetricsReport& m = r.metrics;
    out += "| " + std::string(to_string(r.config.method)) + " | " + r.dataset + " | " +
           std::to_string(r.config.seed) + ' ';
    for (double v : {m.mae, m.mse, m.psnr, m.corr_coeff, m.uce, m.r_uce, m.ece, m.sharpness,
                     m.log_likelihood}) {
      out += "| " + num(v) + ' ';
    }
    out += "|\n";
  }
  return out;
}

std::string render_svg(const std::vector<ExperimentReport>& reports, Curve curve) {
  constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 50;
  const double pw = kW - kLeft - kRight;
  const double ph = kH - kTop - kBottom;
  const auto value = [curve](const EpochRecord& e) {
    return curve == Curve::kValLoss ? e.val_loss : e.val_ece;
  };

  double x_max = 1.0;
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = -y_min;
  for (const auto& r : reports) {
    for (const auto& e : r.trace) {
      const double v = value(e);
      if (!std::isfinite(v)) continue;
      x_max = std::max(x_max, static_cast<double>(e.epoch));
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  if (!std::isfinite(y_min)) {
    y_min = 0.0;
    y_max = 1.0;
  }
  if (y_max - y_min < 1e-12) {
    y_min -= 0.5;
    y_max += 0.5;
  }
  const auto sx = [&](double x) { return kLeft + (x - 1.0) / std::max(1.0, x_max - 1.0) * pw; };
  const auto sy = [&](double y) { return kTop + (y_max - y) / (y_max - y_min) * ph; };

  const std::string title = curve == Curve::kValLoss ? "validation loss" : "validation ECE";
  std::string s = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kW) + "\" height=\"" +
       num(kH) + "\" viewBox=\"0 0 " + num(kW) + ' ' + num(kH) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" +
       title + "</text>\n";
  s += "<g stroke=\"#dddddd\" stroke-width=\"1\" font-size=\"10\">\n";
  for (int k = 0; k <= 10; ++k) {
    const double fx = kLeft + pw * k / 10.0;
    const double fy = kTop + ph * k / 10.0;
    s += "<line x1=\"" + num(fx, 6) + "\" y1=\"" + num(kTop) + "\" x2=\"" + num(fx, 6) +
         "\" y2=\"" + num(kTop + ph) + "\"/>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(fy, 6) + "\" x2=\"" + num(kLeft + pw) +
         "\" y2=\"" + num(fy, 6) + "\"/>\n";
    s += "<text stroke=\"none\" fill=\"black\" x=\"" + num(fx, 6) + "\" y=\"" +
         num(kTop + ph + 14) + "\" text-anchor=\"middle\">" +
         num(1.0 + (x_max - 1.0) * k / 10.0, 4) + "</text>\n";
    s += "<text stroke=\"none\" fill=\"black\" x=\"" + num(kLeft - 6) + "\" y=\"" +
         num(fy + 3, 6) + "\" text-anchor=\"end\">" + num(y_max - (y_max - y_min) * k / 10.0, 4) +
         "</text>\n";
  }
  s += "</g>\n";
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) +
       "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kH - 12) +
       "\" text-anchor=\"middle\" font-size=\"12\">epoch</text>\n";

  for (std::size_t i = 0; i < reports.size(); ++i) {
    const std::string color = kPalette[i % std::size(kPalette)];
    std::string points;
    for (const auto& e : reports[i].trace) {
      const double v = value(e);
      if (!std::isfinite(v)) continue;
      if (!points.empty()) points += ' ';
      points += num(sx(e.epoch), 6) + ',' + num(sy(v), 6);
    }
    const std::string label(to_string(reports[i].config.method));
    s += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" +
         points + "\"><title>" + xml_escape(label) + "</title></polyline>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(i);
    s += "<line x1=\"" + num(kLeft + pw + 12) + "\" y1=\"" + num(ly, 6) + "\" x2=\"" +
         num(kLeft + pw + 32) + "\" y2=\"" + num(ly, 6) + "\" stroke=\"" + color +
         "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(kLeft + pw + 38) + "\" y=\"" + num(ly + 4, 6) +
         "\" font-size=\"12\">" + xml_escape(label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::filesystem::path> emit_report(const std::vector<ExperimentReport>& reports,
                                               Format format,
                                               const std::filesystem::path& dir) {
  if (reports.empty()) throw UsageError("emit_report: no reports");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> out;
  const auto put = [&](const char* name, const std::string& text) {
    out.push_back(dir / name);
    write_text(out.back(), text);
  };
  switch (format) {
    case Format::kCsv: put("summary.csv", render_csv(reports)); break;
    case Format::kJson: put("reports.json", render_json(reports)); break;
    case Format::kMarkdown: put("summary.md", render_markdown(reports)); break;
    case Format::kSvg:
      put("val_loss.svg", render_svg(reports, Curve::kValLoss));
      put("val_ece.svg", render_svg(reports, Curve::kValEce));
      break;
  }
  return out;
}

}  // namespace lika::cli
