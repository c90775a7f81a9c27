#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"

#include "support/tempdir.hpp"

// Exercises the installed binary end to end: exit codes, artifact shapes,
// and rerun determinism. GUARNET_CLI_PATH is injected by the build.
#ifndef GUARNET_CLI_PATH
#error "GUARNET_CLI_PATH must point at the CLI binary"
#endif

namespace {

int run(const std::string& args, const std::string& capture_to = "") {
  std::string cmd = std::string(GUARNET_CLI_PATH) + " " + args;
  if (!capture_to.empty()) cmd += " > " + capture_to + " 2>&1";
  else cmd += " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void write_small_generator_config(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  // A dataset this small cannot host a >300-node component.
  out << "share_large=0\n";
  out << "share_small=0.9\n";
}

std::string synth_small(const testutil::TempDir& tmp, const std::string& name,
                        const std::string& extra = "") {
  // One shared config path per workspace: the manifest records input paths,
  // so determinism comparisons need both runs to reference the same file.
  std::string cfg = tmp.file("generator_cfg.txt");
  write_small_generator_config(cfg);
  std::string dir = tmp.file(name);
  EXPECT_EQ(run("--out-dir " + dir + " --config " + cfg + " --seed 11 synth --customers 120" +
                " --months 21 " + extra),
            0);
  return dir;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  EXPECT_TRUE(in.is_open()) << path;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(Cli, HelpExitsZeroAndListsSubcommands) {
  testutil::TempDir tmp;
  std::string out = tmp.file("help.txt");
  ASSERT_EQ(run("--help", out), 0);
  std::string text;
  for (const auto& l : read_lines(out)) text += l + "\n";
  EXPECT_NE(text.find("synth"), std::string::npos);
  EXPECT_NE(text.find("rolling"), std::string::npos);
  EXPECT_NE(text.find("selftest"), std::string::npos);
}

TEST(Cli, UnknownFlagIsUsageError) {
  testutil::TempDir tmp;
  EXPECT_EQ(run("stats --bogus-flag --out-dir " + tmp.file("o")), 1);
}

TEST(Cli, MissingDataDirIsDataError) {
  testutil::TempDir tmp;
  EXPECT_EQ(run("--data-dir " + tmp.file("nope") + " --out-dir " + tmp.file("o") + " stats"), 2);
}

TEST(Cli, SynthRerunsAreByteIdentical) {
  testutil::TempDir tmp;
  std::string a = synth_small(tmp, "a");
  std::string b = synth_small(tmp, "b");
  for (const char* name : {"customers.csv", "contracts.csv", "guarantees.csv", "repayments.csv",
                           "manifest.json"}) {
    EXPECT_EQ(testutil::slurp(a + "/" + name), testutil::slurp(b + "/" + name)) << name;
  }
}

TEST(Cli, StatsReportsDefaultRate) {
  testutil::TempDir tmp;
  std::string data = synth_small(tmp, "data");
  std::string out = tmp.file("stats");
  ASSERT_EQ(run("--data-dir " + data + " --out-dir " + out + " stats"), 0);

  auto j = nlohmann::json::parse(testutil::slurp(out + "/stats.json"));
  ASSERT_TRUE(j.contains("default_rate"));
  double rate = j["default_rate"].get<double>();
  EXPECT_GE(rate, 0.0);
  EXPECT_LE(rate, 1.0);
  EXPECT_GT(j["n_customers"].get<std::int64_t>(), 0);
}

TEST(Cli, RollingWritesOneRowPerWindow) {
  testutil::TempDir tmp;
  std::string data = synth_small(tmp, "data");
  std::string out = tmp.file("roll");
  ASSERT_EQ(run("--data-dir " + data + " --out-dir " + out +
                " rolling --start 2012Q3 --windows 2 --ablations NW,H" +
                " --method label_propagation"),
            0);

  auto auc_rows = read_lines(out + "/auc_by_window.csv");
  ASSERT_EQ(auc_rows.size(), 3u);  // header + one row per window
  EXPECT_NE(auc_rows[0].find("NW"), std::string::npos);
  EXPECT_NE(auc_rows[0].find("H"), std::string::npos);

  auto j = nlohmann::json::parse(testutil::slurp(out + "/rolling.json"));
  ASSERT_EQ(j["windows"].size(), 2u);
  auto manifest = nlohmann::json::parse(testutil::slurp(out + "/manifest.json"));
  EXPECT_EQ(manifest["command"], "rolling");
}

TEST(Cli, FeatureTrainPredictPipeline) {
  testutil::TempDir tmp;
  std::string data = synth_small(tmp, "data");

  std::string feat = tmp.file("feat");
  ASSERT_EQ(run("--data-dir " + data + " --out-dir " + feat +
                " features --quarter 2012Q4 --method label_propagation"),
            0);

  std::string model = tmp.file("model");
  ASSERT_EQ(run("--out-dir " + model + " train --matrix " + feat + "/features_2012Q4.csv" +
                " --categories " + feat + "/features_2012Q4.categories.json --rounds 20"),
            0);

  std::string pred = tmp.file("pred");
  ASSERT_EQ(run("--out-dir " + pred + " predict --model " + model + "/model.json" +
                " --matrix " + feat + "/features_2012Q4.csv" +
                " --categories " + feat + "/features_2012Q4.categories.json"),
            0);

  auto rows = read_lines(pred + "/predictions.csv");
  auto matrix_rows = read_lines(feat + "/features_2012Q4.csv");
  ASSERT_EQ(rows.size(), matrix_rows.size());  // same header + body count
  EXPECT_EQ(rows[0], "customer_id,label,score");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto last_comma = rows[i].rfind(',');
    double score = std::stod(rows[i].substr(last_comma + 1));
    EXPECT_GE(score, 0.0);
    EXPECT_LE(score, 1.0);
  }
}
