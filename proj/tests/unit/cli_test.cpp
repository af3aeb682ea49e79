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
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "emit.hpp"
#include "lika/harness.hpp"

namespace lika::cli {
namespace {

namespace fs = std::filesystem;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("lika_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    unsetenv("LIKA_SEED");
  }
  void TearDown() override {
    fs::remove_all(root_);
    unsetenv("LIKA_SEED");
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "lika");
    std::ostringstream err;
    std::ostringstream out;
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    const int code = parse_and_dispatch(args);
    std::cerr.rdbuf(old_err);
    std::cout.rdbuf(old_out);
    stderr_ = err.str() + out.str();
    return code;
  }

  std::string synth(int n = 120) {
    EXPECT_EQ(run({"gen-synth", "--n", std::to_string(n), "--seed", "1", "--out-dir",
                   (root_ / "data").string()}),
              0);
    return (root_ / "data" / "synth.csv").string();
  }

  std::string path(const std::string& rel) const { return (root_ / rel).string(); }

  fs::path root_;
  std::string stderr_;
};

TEST_F(CliTest, TrainHappyPath) {
  const std::string data = synth(100);
  EXPECT_EQ(run({"train", "--method", "lika", "--data", data, "--epochs", "2000", "--seed", "7",
                 "--out-dir", path("run1")}),
            0)
      << stderr_;
  EXPECT_TRUE(fs::exists(path("run1/report.json")));
  EXPECT_TRUE(fs::exists(path("run1/trace.csv")));
  EXPECT_TRUE(fs::exists(path("run1/summary.csv")));
  const ExperimentReport r = report_from_json(read_text(path("run1/report.json")));
  EXPECT_EQ(r.trace.size(), 2000u);
  EXPECT_EQ(r.config.seed, 7u);
}

TEST_F(CliTest, UnknownMethodListsAllowedValues) {
  const std::string data = synth();
  EXPECT_EQ(run({"train", "--method", "bayes", "--data", data}), 1);
  for (const char* m : {"nll", "lika", "lika-norm", "lika-exact", "do-nll", "do-lika", "ens-nll",
                        "ens-lika", "ttda"}) {
    EXPECT_NE(stderr_.find(m), std::string::npos) << stderr_;
  }
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"fly"}), 1);
  EXPECT_EQ(run({"train", "--data", data, "--epochs", "many"}), 1);
  EXPECT_EQ(run({"train", "--data", data, "--prior", "cauchy"}), 1);
  EXPECT_EQ(run({"--help"}), 0);
}

TEST_F(CliTest, NonNumericCellIsDataError) {
  const fs::path bad = root_ / "bad.csv";
  std::ofstream(bad) << "x0,y0\n1,2\n3,4\n5,abc\n6,7\n";
  EXPECT_EQ(run({"train", "--data", bad.string(), "--epochs", "2"}), 2);
  EXPECT_NE(stderr_.find("row 3"), std::string::npos) << stderr_;
  EXPECT_NE(stderr_.find("column 2"), std::string::npos) << stderr_;
  EXPECT_EQ(run({"train", "--data", path("missing.csv")}), 2);
}

TEST_F(CliTest, GenericCsvNeedsTarget) {
  const fs::path csv = root_ / "house.csv";
  std::string text = "rooms,age,price\n";
  for (int i = 0; i < 40; ++i) {
    text += std::to_string(2 + i % 4) + "," + std::to_string(i) + "," + std::to_string(100 + 3 * i) + "\n";
  }
  std::ofstream(csv) << text;
  EXPECT_EQ(run({"train", "--data", csv.string(), "--epochs", "3"}), 1);
  EXPECT_EQ(run({"train", "--data", csv.string(), "--target", "value", "--epochs", "3"}), 2);
  EXPECT_NE(stderr_.find("value"), std::string::npos);
  EXPECT_EQ(run({"train", "--data", csv.string(), "--target", "price", "--epochs", "3",
                 "--out-dir", path("house")}),
            0)
      << stderr_;
}

TEST_F(CliTest, UnwritableOutputIsDataError) {
  const std::string data = synth();
  const fs::path blocker = root_ / "file";
  std::ofstream(blocker) << "x";
  EXPECT_EQ(run({"train", "--data", data, "--epochs", "2", "--out-dir", (blocker / "sub").string()}), 2);
  EXPECT_EQ(run({"gen-synth", "--out-dir", (blocker / "sub").string()}), 2);
}

TEST_F(CliTest, NonFiniteTrainingIsNumericFailure) {
  const std::string data = synth();
  EXPECT_EQ(run({"train", "--method", "nll", "--data", data, "--epochs", "20", "--lr", "1e300",
                 "--out-dir", path("nan")}),
            3)
      << stderr_;
  EXPECT_TRUE(fs::exists(path("nan/trace.csv")));
}

TEST_F(CliTest, FlagPrecedenceThreeLayers) {
  const std::string data = synth();
  const auto config_of = [&](const std::string& dir) {
    return report_from_json(read_text(path(dir + "/report.json"))).config;
  };
  // Built-in defaults, with LIKA_SEED as the seed fallback.
  setenv("LIKA_SEED", "11", 1);
  ASSERT_EQ(run({"train", "--data", data, "--epochs", "2", "--out-dir", path("a")}), 0) << stderr_;
  TrainConfig c = config_of("a");
  EXPECT_EQ(c.seed, 11u);
  EXPECT_EQ(c.batch_size, 64);
  EXPECT_EQ(c.method, Method::kLika);

  const fs::path cfg = root_ / "cfg.json";
  std::ofstream(cfg) << R"({"epochs": 3, "batch-size": 16, "seed": 12, "method": "nll", "t0": 50})";
  ASSERT_EQ(run({"train", "--data", data, "--config", cfg.string(), "--out-dir", path("b")}), 0);
  c = config_of("b");
  EXPECT_EQ(c.epochs, 3);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_EQ(c.seed, 12u);
  EXPECT_EQ(c.method, Method::kNll);
  EXPECT_EQ(c.schedule.t0, 50.0);

  ASSERT_EQ(run({"train", "--data", data, "--config", cfg.string(), "--epochs", "4", "--seed",
                 "13", "--t0", "20", "--out-dir", path("c")}),
            0);
  c = config_of("c");
  EXPECT_EQ(c.epochs, 4);
  EXPECT_EQ(c.batch_size, 16);
  EXPECT_EQ(c.seed, 13u);
  EXPECT_EQ(c.schedule.t0, 20.0);

  setenv("LIKA_SEED", "not-a-number", 1);
  EXPECT_EQ(run({"train", "--data", data, "--epochs", "2", "--out-dir", path("d")}), 1);
  unsetenv("LIKA_SEED");
  std::ofstream(cfg) << R"({"epoch": 3})";
  EXPECT_EQ(run({"train", "--data", data, "--config", cfg.string()}), 1);
}

TEST_F(CliTest, EvalReproducesTrainMetrics) {
  const std::string data = synth(200);
  for (const char* m : {"lika", "ens-nll", "ttda", "do-nll"}) {
    const std::string dir = std::string("t_") + m;
    ASSERT_EQ(run({"train", "--method", m, "--data", data, "--epochs", "5", "--ensemble-size", "2",
                   "--out-dir", path(dir)}),
              0)
        << stderr_;
    ASSERT_EQ(run({"eval", "--run-dir", path(dir), "--data", data, "--out-dir", path(dir + "_eval")}),
              0)
        << stderr_;
    EXPECT_EQ(read_text(path(dir + "/report.json")), read_text(path(dir + "_eval/report.json"))) << m;
  }
  EXPECT_EQ(run({"eval", "--run-dir", path("nowhere"), "--data", data}), 2);
}

TEST_F(CliTest, AblateOodAndReportVerbs) {
  const std::string data = synth(150);
  ASSERT_EQ(run({"ablate", "--data", data, "--epochs", "3", "--out-dir", path("ab")}), 0) << stderr_;
  const std::string table = read_text(path("ab/ablation.csv"));
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 10);
  ASSERT_EQ(run({"ood", "--method", "nll,lika", "--data", data, "--epochs", "3", "--seeds", "2",
                 "--out-dir", path("ood")}),
            0)
      << stderr_;
  const std::string ood = read_text(path("ood/ood.csv"));
  EXPECT_EQ(std::count(ood.begin(), ood.end(), '\n'), 7);

  ASSERT_EQ(run({"train", "--method", "nll,lika", "--data", data, "--epochs", "4", "--out-dir",
                 path("tr")}),
            0);
  ASSERT_EQ(run({"report", path("tr/nll"), path("tr/lika/report.json"), "--out-dir", path("rep")}),
            0)
      << stderr_;
  for (const char* f : {"summary.csv", "reports.json", "summary.md", "val_loss.svg", "val_ece.svg"}) {
    EXPECT_TRUE(fs::exists(path(std::string("rep/") + f))) << f;
  }
  EXPECT_EQ(run({"report", path("tr/nll"), "--format", "pdf", "--out-dir", path("rep2")}), 1);
}

// --- emitters --------------------------------------------------------------

std::vector<ExperimentReport> sample_reports() {
  const Dataset ds = generate_synthetic(150, 4);
  std::vector<ExperimentReport> out;
  for (Method m : {Method::kNll, Method::kLika, Method::kDoNll}) {
    TrainConfig c;
    c.method = m;
    c.epochs = 6;
    c.hidden_layers = {8};
    c.mc_passes = 3;
    out.push_back(run_experiment(ds, c, "synth"));
  }
  return out;
}

// Minimal well-formedness check: balanced tags, quoted attributes.
bool well_formed_xml(const std::string& s, std::string& why) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  if (s.rfind("<?xml", 0) == 0) i = s.find("?>") + 2;
  static const std::regex open(R"(^<([A-Za-z][\w:-]*)(\s+[\w:-]+="[^"<]*")*\s*(/?)>)");
  static const std::regex close(R"(^</([A-Za-z][\w:-]*)\s*>)");
  while (i < s.size()) {
    const std::size_t lt = s.find('<', i);
    if (lt == std::string::npos) break;
    const std::string text = s.substr(i, lt - i);
    if (text.find('&') != std::string::npos &&
        !std::regex_search(text, std::regex("&(amp|lt|gt|quot);"))) {
      why = "bare ampersand";
      return false;
    }
    std::smatch m;
    const std::string rest = s.substr(lt, std::min<std::size_t>(4096, s.size() - lt));
    if (std::regex_search(rest, m, close)) {
      if (stack.empty() || stack.back() != m[1]) {
        why = "mismatched </" + m[1].str() + ">";
        return false;
      }
      stack.pop_back();
    } else if (std::regex_search(rest, m, open)) {
      if (m[3].str().empty()) stack.push_back(m[1]);
    } else {
      why = "malformed tag near " + rest.substr(0, 40);
      return false;
    }
    i = lt + static_cast<std::size_t>(m.length(0));
  }
  if (!stack.empty()) {
    why = "unclosed <" + stack.back() + ">";
    return false;
  }
  return true;
}

TEST(Emit, CsvShapeAndJsonRoundTrip) {
  const auto reports = sample_reports();
  const std::string csv = render_csv(reports);
  std::istringstream in(csv);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 11) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 4);
  const auto arr = nlohmann::json::parse(render_json(reports));
  ASSERT_EQ(arr.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const ExperimentReport back = report_from_json(arr[i].dump());
    EXPECT_EQ(back.metrics, reports[i].metrics);
    EXPECT_EQ(back.trace, reports[i].trace);
    EXPECT_EQ(config_to_json(back.config), config_to_json(reports[i].config));
  }
  // Leading keys follow the summary column order.
  const auto parsed = nlohmann::ordered_json::parse(report_to_json(reports[0]));
  std::vector<std::string> keys;
  for (const auto& [k, v] : parsed.items()) keys.push_back(k);
  keys.resize(12);
  EXPECT_EQ(keys, (std::vector<std::string>{"method", "dataset", "seed", "mae", "mse", "psnr", "corr_coeff", "uce", "r_uce",
                                            "ece", "sharpness", "log_likelihood"}));
}

TEST(Emit, MarkdownRowPerReport) {
  const auto reports = sample_reports();
  const std::string md = render_markdown(reports);
  EXPECT_EQ(std::count(md.begin(), md.end(), '\n'), 5);
  EXPECT_NE(md.find("| do-nll | synth |"), std::string::npos);
}

TEST(Emit, SvgWellFormedWithOnePolylinePerMethod) {
  const auto reports = sample_reports();
  for (Curve c : {Curve::kValLoss, Curve::kValEce}) {
    const std::string svg = render_svg(reports, c);
    std::string why;
    EXPECT_TRUE(well_formed_xml(svg, why)) << why;
    std::size_t polylines = 0;
    for (std::size_t p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) {
      ++polylines;
    }
    EXPECT_EQ(polylines, reports.size());
    for (const char* m : {">nll<", ">lika<", ">do-nll<"}) EXPECT_NE(svg.find(m), std::string::npos);
    EXPECT_EQ(svg, render_svg(reports, c));
  }
  std::string why;
  EXPECT_FALSE(well_formed_xml("<svg><g></svg>", why));
}

TEST(Emit, RepeatedEmissionIsByteIdentical) {
  const auto reports = sample_reports();
  const fs::path a = fs::temp_directory_path() / "lika_emit_a";
  const fs::path b = fs::temp_directory_path() / "lika_emit_b";
  for (Format f : {Format::kCsv, Format::kJson, Format::kMarkdown, Format::kSvg}) {
    const auto pa = emit_report(reports, f, a);
    const auto pb = emit_report(reports, f, b);
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(read_text(pa[i]), read_text(pb[i]));
  }
  EXPECT_THROW(emit_report({}, Format::kCsv, a), UsageError);
  EXPECT_THROW(emit_report(reports, Format::kCsv, "/proc/lika_no_such_dir"), DataError);
  fs::remove_all(a);
  fs::remove_all(b);
  EXPECT_EQ(parse_format("markdown"), Format::kMarkdown);
  EXPECT_THROW(parse_format("html"), UsageError);
}

}  // namespace
}  // namespace lika::cli
