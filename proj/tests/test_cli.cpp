#include <gtest/gtest.h>

#include <regex>

#include "siot/rng.hpp"
#include "support.hpp"

using siot::testing::read_text;
using siot::testing::run_cli;
using siot::testing::TempDir;
using siot::testing::write_text;

namespace {

std::string q(const std::string& s) { return "\"" + s + "\""; }

constexpr const char* kFeatureHeader = "trustor,trustee,t_fs,t_coi,t_cop,t_reward\n";

// 2-node trace where both nodes interact once.
void write_two_node_trace(const TempDir& dir) {
  write_text(dir.file("nodes.csv"), "node_id\n0\n1\n");
  write_text(dir.file("friends.csv"), "node_id,friend_id\n0,1\n");
  write_text(dir.file("communities.csv"), "node_id,community_id\n0,g1\n1,g1\n");
  write_text(dir.file("interactions.csv"), "timestamp,source,target,messages,success\n1,0,1,2,1\n");
}

std::string feature_row(int i, int j, const std::array<double, 4>& f) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f,%.6f\n", i, j, f[0], f[1], f[2], f[3]);
  return buf;
}

// Three tight blobs at mutually distant corners of the unit cube.
std::string three_blob_features() {
  const std::array<std::array<double, 4>, 3> centers = {{{0.1, 0.1, 0.1, 0.1},
                                                         {0.9, 0.9, 0.1, 0.1},
                                                         {0.1, 0.9, 0.9, 0.5}}};
  siot::Rng rng(12);
  std::string text = kFeatureHeader;
  for (int k = 0; k < 150; ++k) {
    std::array<double, 4> f;
    for (int d = 0; d < 4; ++d) f[d] = std::clamp(rng.normal(centers[k % 3][d], 0.03), 0.0, 1.0);
    text += feature_row(k, k + 1000, f);
  }
  return text;
}

// Label 1 iff coi > 0.5, otherwise 0.
void write_separable(const TempDir& dir, int n) {
  siot::Rng rng(4);
  std::string features = kFeatureHeader;
  std::string labels = "trustor,trustee,label\n";
  for (int k = 0; k < n; ++k) {
    const std::array<double, 4> f{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    features += feature_row(k, k + 5000, f);
    // Decide on the printed value so the file is self-consistent.
    char printed[32];
    std::snprintf(printed, sizeof printed, "%.6f", f[1]);
    const double coi = std::stod(printed);
    labels += std::to_string(k) + "," + std::to_string(k + 5000) + "," + (coi > 0.5 ? "1" : "0") + "\n";
  }
  write_text(dir.file("features.csv"), features);
  write_text(dir.file("labels.csv"), labels);
}

double printed_value(const std::string& out, const std::string& key) {
  const std::regex re(key + ": ([0-9.]+)");
  std::smatch m;
  if (!std::regex_search(out, m, re)) return -1.0;
  return std::stod(m[1]);
}

}  // namespace

TEST(Cli, HelpAndUsage) {
  EXPECT_EQ(run_cli("--help").exit_code, 0);
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("bogus").exit_code, 1);
  EXPECT_EQ(run_cli("features --out x.csv").exit_code, 1);
}

TEST(Cli, FeaturesOnTwoNodeTrace) {
  TempDir dir;
  write_two_node_trace(dir);
  const auto r = run_cli("features --trace " + q(dir.str()) + " --out " + q(dir.file("f.csv")));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto text = read_text(dir.file("f.csv"));
  EXPECT_EQ(text, std::string(kFeatureHeader) + "0,1,0.000000,1.000000,0.000000,1.000000\n" +
                      "1,0,0.000000,1.000000,0.000000,1.000000\n");
}

TEST(Cli, MissingInteractionsFileNamed) {
  TempDir dir;
  write_two_node_trace(dir);
  std::filesystem::remove(dir.file("interactions.csv"));
  const auto r = run_cli("features --trace " + q(dir.str()) + " --out " + q(dir.file("f.csv")));
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.err.find("interactions.csv"), std::string::npos) << r.err;
}

TEST(Cli, LabelThreeBlobsReportsElbowThree) {
  TempDir dir;
  write_text(dir.file("f.csv"), three_blob_features());
  const auto r = run_cli("label --features " + q(dir.file("f.csv")) + " --out " + q(dir.file("l.csv")) + " --seed 3");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("elbow k: 3"), std::string::npos) << r.out;
  EXPECT_TRUE(std::filesystem::exists(dir.file("elbow.csv")));
  for (const char* f : {"scatter_fs_coi.csv", "scatter_fs_reward.csv", "scatter_fs_cop.csv",
                        "scatter_coi_reward.csv", "scatter_coi_cop.csv", "scatter_reward_cop.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir.file(f))) << f;
  }
  const auto labels = read_text(dir.file("l.csv"));
  EXPECT_EQ(std::count(labels.begin(), labels.end(), '\n'), 151);
}

TEST(Cli, LabelEmptyFeaturesFails) {
  TempDir dir;
  write_text(dir.file("f.csv"), kFeatureHeader);
  EXPECT_EQ(run_cli("label --features " + q(dir.file("f.csv")) + " --out " + q(dir.file("l.csv"))).exit_code, 1);
}

TEST(Cli, LabelTooFewDistinctFails) {
  TempDir dir;
  write_text(dir.file("f.csv"), std::string(kFeatureHeader) + "0,1,0.1,0.1,0.1,0.1\n1,0,0.1,0.1,0.1,0.1\n");
  const auto r = run_cli("label --features " + q(dir.file("f.csv")) + " --out " + q(dir.file("l.csv")) + " --k-max 1");
  EXPECT_EQ(r.exit_code, 1);
}

TEST(Cli, TrainSeparableFixture) {
  TempDir dir;
  write_separable(dir, 2000);
  const auto r = run_cli("train --features " + q(dir.file("features.csv")) + " --labels " +
                         q(dir.file("labels.csv")) + " --model-out " + q(dir.file("model.json")));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_GE(printed_value(r.out, "held-out accuracy"), 0.98) << r.out;
  const std::regex re("importances: fs=([0-9.]+) coi=([0-9.]+) cop=([0-9.]+) reward=([0-9.]+)");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(r.out, m, re)) << r.out;
  double sum = 0.0;
  for (int k = 1; k <= 4; ++k) sum += std::stod(m[k]);
  EXPECT_NEAR(sum, 1.0, 0.001);
  EXPECT_TRUE(std::filesystem::exists(dir.file("importances.csv")));
  EXPECT_TRUE(std::filesystem::exists(dir.file("boundary_coi_reward.csv")));
}

TEST(Cli, TrainMismatchedRowsFails) {
  TempDir dir;
  write_separable(dir, 50);
  auto labels = read_text(dir.file("labels.csv"));
  labels.erase(labels.rfind('\n', labels.size() - 2) + 1);
  write_text(dir.file("labels.csv"), labels);
  const auto r = run_cli("train --features " + q(dir.file("features.csv")) + " --labels " +
                         q(dir.file("labels.csv")) + " --model-out " + q(dir.file("model.json")));
  EXPECT_EQ(r.exit_code, 1);
}

TEST(Cli, TrainInsufficientDataFails) {
  TempDir dir;
  write_separable(dir, 5);
  const auto r = run_cli("train --features " + q(dir.file("features.csv")) + " --labels " +
                         q(dir.file("labels.csv")) + " --model-out " + q(dir.file("model.json")));
  EXPECT_EQ(r.exit_code, 1);
}

TEST(Cli, AggregateThetaValidation) {
  TempDir dir;
  write_two_node_trace(dir);
  write_text(dir.file("l.csv"), "trustor,trustee,label\n0,1,1\n1,0,2\n");
  const std::string base = "aggregate --trace " + q(dir.str()) + " --labels " + q(dir.file("l.csv")) +
                           " --out " + q(dir.file("v.csv"));
  EXPECT_EQ(run_cli(base + " --theta 0").exit_code, 1);
  EXPECT_EQ(run_cli(base + " --theta 1.5").exit_code, 1);
  EXPECT_EQ(run_cli(base + " --sweep 0.5,0.7").exit_code, 1);
  const auto ok = run_cli(base + " --theta 1.0");
  ASSERT_EQ(ok.exit_code, 0) << ok.err;
  EXPECT_EQ(read_text(dir.file("v.csv")),
            "trustor,trustee,direct_label,t_count,u_count,n_count,verdict\n0,1,1,0,0,0,1\n1,0,2,0,0,0,0\n");
}

TEST(Cli, AggregateRejectsUnknownNodes) {
  TempDir dir;
  write_two_node_trace(dir);
  write_text(dir.file("l.csv"), "trustor,trustee,label\n0,1,1\n1,0,2\n0,9,1\n");
  const auto r = run_cli("aggregate --trace " + q(dir.str()) + " --labels " + q(dir.file("l.csv")) +
                         " --out " + q(dir.file("v.csv")));
  EXPECT_EQ(r.exit_code, 1);
}

TEST(Cli, AggregateHandTracedFixture) {
  // Trustor 0, trustee 1, common friends 2 and 3 that both vouch for 1.
  TempDir dir;
  write_text(dir.file("nodes.csv"), "node_id\n0\n1\n2\n3\n");
  write_text(dir.file("friends.csv"), "node_id,friend_id\n0,2\n0,3\n1,2\n1,3\n");
  write_text(dir.file("communities.csv"), "node_id,community_id\n");
  write_text(dir.file("interactions.csv"),
             "timestamp,source,target,messages,success\n1,0,1,1,0\n2,2,1,1,1\n3,3,1,1,1\n");
  write_text(dir.file("l.csv"), "trustor,trustee,label\n0,1,0\n1,0,0\n2,1,1\n1,2,1\n3,1,1\n1,3,1\n");
  write_text(dir.file("gt.csv"), "trustor,trustee,expected\n0,1,1\n");
  const auto r = run_cli("aggregate --trace " + q(dir.str()) + " --labels " + q(dir.file("l.csv")) + " --out " +
                         q(dir.file("v.csv")) + " --sweep 0.6,0.7 --ground-truth " + q(dir.file("gt.csv")));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  // (0,1): |T| = 2, P_T = 2/3. Trust at 0.6, not at 0.7.
  const auto verdicts = read_text(dir.file("v.csv"));
  EXPECT_NE(verdicts.find("\n0,1,0,2,0,0,0\n"), std::string::npos) << verdicts;
  EXPECT_EQ(read_text(dir.file("theta_sweep.csv")), "theta,accuracy\n0.600000,1.000000\n0.700000,0.000000\n");
}

TEST(Cli, SimulateDefaults) {
  TempDir dir;
  const auto r = run_cli("simulate --out " + q(dir.str()));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto nodes = read_text(dir.file("nodes.csv"));
  EXPECT_EQ(std::count(nodes.begin(), nodes.end(), '\n'), 77);
  const auto inter = read_text(dir.file("interactions.csv"));
  EXPECT_EQ(std::count(inter.begin(), inter.end(), '\n'), 18227);
  EXPECT_TRUE(std::filesystem::exists(dir.file("ground_truth.csv")));
  EXPECT_FALSE(std::filesystem::exists(dir.file("report.json")));
}

TEST(Cli, SimulateAttackWritesAttackBlock) {
  TempDir dir;
  const auto r = run_cli("simulate --out " + q(dir.str()) +
                         " --nodes 30 --interactions 3000 --attack ballot_stuffing --intensity 1.0");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto report = read_text(dir.file("report.json"));
  EXPECT_NE(report.find("\"attack\""), std::string::npos);
  EXPECT_NE(report.find("\"ballot_stuffing\""), std::string::npos);
  EXPECT_NE(report.find("\"schema_version\": 1"), std::string::npos);
}

TEST(Cli, SimulateInfeasibleConfig) {
  TempDir dir;
  EXPECT_EQ(run_cli("simulate --out " + q(dir.str()) + " --communities 0").exit_code, 1);
  EXPECT_EQ(run_cli("simulate --out " + q(dir.str()) + " --attack sybil").exit_code, 1);
  EXPECT_EQ(run_cli("simulate --out " + q(dir.str()) + " --full-pipeline --theta 0").exit_code, 1);
}

TEST(Cli, PipelineThroughSubcommands) {
  TempDir dir;
  const std::string trace = dir.file("trace");
  ASSERT_EQ(run_cli("simulate --out " + q(trace) + " --nodes 30 --interactions 3000 --seed 2").exit_code, 0);
  ASSERT_EQ(run_cli("features --trace " + q(trace) + " --out " + q(dir.file("f.csv"))).exit_code, 0);
  ASSERT_EQ(run_cli("label --features " + q(dir.file("f.csv")) + " --out " + q(dir.file("l.csv"))).exit_code, 0);
  ASSERT_EQ(run_cli("train --features " + q(dir.file("f.csv")) + " --labels " + q(dir.file("l.csv")) +
                    " --model-out " + q(dir.file("m.json")) + " --trees 20")
                .exit_code,
            0);
  const auto r = run_cli("aggregate --trace " + q(trace) + " --labels " + q(dir.file("l.csv")) + " --out " +
                         q(dir.file("v.csv")) + " --sweep 0.3,0.7 --ground-truth " + q(trace + "/ground_truth.csv"));
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_NE(r.out.find("theta 0.700000 accuracy"), std::string::npos);
}
