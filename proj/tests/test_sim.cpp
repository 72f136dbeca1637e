#include <gtest/gtest.h>

#include <cmath>

#include <json.hpp>

#include "siot/error.hpp"
#include "siot/features.hpp"
#include "siot/sim.hpp"
#include "support.hpp"

using namespace siot;
using siot::testing::read_text;
using siot::testing::TempDir;

namespace {

SimConfig small_config(std::uint64_t seed = 3) {
  SimConfig cfg;
  cfg.node_count = 30;
  cfg.interaction_count = 3000;
  cfg.rng_seed = seed;
  return cfg;
}

LabelTable random_labels(const SocialGraph& g, std::uint64_t seed) {
  Rng rng(seed);
  LabelTable labels;
  for (const auto& p : interacting_pairs(g)) labels[p] = static_cast<TrustLabel>(rng.index(3));
  return labels;
}

std::size_t changed(const LabelTable& a, const LabelTable& b) {
  std::size_t n = 0;
  for (const auto& [k, v] : a) n += b.at(k) != v ? 1 : 0;
  return n;
}

PipelineParams quick_params() {
  PipelineParams p;
  p.forest.tree_count = 20;
  p.k_max = 5;
  return p;
}

}  // namespace

TEST(Generate, DefaultsMatchTraceShape) {
  const auto t = generate_trace(SimConfig{});
  EXPECT_EQ(t.graph.node_count(), 76u);
  EXPECT_EQ(t.graph.interactions().size(), 18226u);
  EXPECT_EQ(std::count(t.truth.honest.begin(), t.truth.honest.end(), false), 15);
  for (const auto& r : t.graph.interactions()) {
    ASSERT_GE(r.timestamp, 0);
    ASSERT_LT(r.timestamp, 4 * 24 * 3600);
  }
  for (NodeId i = 0; i < 76; ++i) {
    ASSERT_GE(t.graph.communities(i).size(), 1u);
    ASSERT_LE(t.graph.communities(i).size(), 3u);
  }
}

TEST(Generate, HonestSuccessRate) {
  SimConfig cfg;
  cfg.malicious_fraction = 0.0;
  cfg.interaction_count = 20000;
  const auto t = generate_trace(cfg);
  const auto ok = std::count_if(t.graph.interactions().begin(), t.graph.interactions().end(),
                                [](const InteractionRecord& r) { return r.success; });
  EXPECT_NEAR(static_cast<double>(ok) / 20000.0, 0.95, 0.02);
}

TEST(Generate, MaliciousServeBadly) {
  const auto t = generate_trace(SimConfig{});
  std::size_t n = 0, ok = 0;
  for (const auto& r : t.graph.interactions()) {
    if (t.truth.honest[r.target] && !t.truth.honest[r.source]) {
      ++n;
      ok += r.success ? 1 : 0;
    }
  }
  ASSERT_GT(n, 1000u);
  EXPECT_NEAR(static_cast<double>(ok) / static_cast<double>(n), 0.2, 0.03);
}

TEST(Generate, ByteIdenticalFiles) {
  TempDir a, b;
  write_sim_output(generate_trace(small_config()), a.str());
  write_sim_output(generate_trace(small_config()), b.str());
  for (const char* f : {"nodes.csv", "friends.csv", "communities.csv", "interactions.csv",
                        "ground_truth.csv", "ground_truth_nodes.csv"}) {
    const auto text = read_text(a.file(f));
    EXPECT_FALSE(text.empty()) << f;
    EXPECT_EQ(text, read_text(b.file(f))) << f;
  }
}

TEST(Generate, SeedChangesTrace) {
  EXPECT_FALSE(generate_trace(small_config(1)).graph == generate_trace(small_config(2)).graph);
}

TEST(Generate, MinimalGraph) {
  SimConfig cfg;
  cfg.node_count = 2;
  cfg.interaction_count = 1;
  cfg.malicious_fraction = 0.0;
  const auto t = generate_trace(cfg);
  EXPECT_EQ(t.graph.node_count(), 2u);
  ASSERT_EQ(t.graph.interactions().size(), 1u);
  EXPECT_EQ(interacting_pairs(t.graph).size(), 2u);
}

TEST(Generate, EmittedFilesPassIngestion) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = generate_trace(small_config(seed));
    TempDir dir;
    write_sim_output(t, dir.str());
    const auto back = ingest_trace(TracePaths::in_directory(dir.str()));
    EXPECT_EQ(back.interactions(), t.graph.interactions());
    EXPECT_EQ(compute_features(back).rows, compute_features(t.graph).rows);
    const auto truth = read_ground_truth_csv(dir.file("ground_truth.csv"), back);
    EXPECT_EQ(truth, t.truth.pair_table(t.graph));
  }
}

TEST(Generate, InfeasibleConfigs) {
  SimConfig cfg;
  cfg.community_count = 0;
  EXPECT_THROW(generate_trace(cfg), ConfigError);
  cfg = SimConfig{};
  cfg.node_count = 1;
  EXPECT_THROW(generate_trace(cfg), ConfigError);
  cfg = SimConfig{};
  cfg.interaction_count = 0;
  EXPECT_THROW(generate_trace(cfg), ConfigError);
  cfg = SimConfig{};
  cfg.malicious_fraction = 1.0;
  EXPECT_THROW(generate_trace(cfg), ConfigError);
}

TEST(GroundTruth, TrusteeDecides) {
  GroundTruth g{{true, false}};
  EXPECT_EQ(g.expected(0, 1), TrustVerdict::Untrustworthy);
  EXPECT_EQ(g.expected(1, 0), TrustVerdict::Trustworthy);
}

TEST(Attacks, NamesRoundTrip) {
  for (auto k : {AttackKind::None, AttackKind::BallotStuffing, AttackKind::BadMouthing,
                 AttackKind::SelfPromoting, AttackKind::Whitewashing}) {
    EXPECT_EQ(parse_attack(attack_name(k)), k);
  }
  EXPECT_THROW(parse_attack("sybil"), ConfigError);
}

TEST(Attacks, SpecValidation) {
  EXPECT_THROW((AttackSpec{AttackKind::BadMouthing, 1.0, 0.5}.validate()), ConfigError);
  EXPECT_THROW((AttackSpec{AttackKind::BadMouthing, 0.2, 1.5}.validate()), ConfigError);
}

TEST(Attacks, SelectionPrefersMaliciousNodes) {
  const GroundTruth truth{{true, false, true, false, true, true, true, true, true, true}};
  const auto two = select_attackers(truth, 0.2, 5);
  EXPECT_EQ(two, (std::vector<NodeId>{1, 3}));
  const auto four = select_attackers(truth, 0.4, 5);
  ASSERT_EQ(four.size(), 4u);
  EXPECT_TRUE(std::is_sorted(four.begin(), four.end()));
  EXPECT_TRUE(std::binary_search(four.begin(), four.end(), 1u));
  EXPECT_TRUE(std::binary_search(four.begin(), four.end(), 3u));
}

TEST(Attacks, ZeroIntensityIsIdentity) {
  const auto t = generate_trace(small_config());
  const auto labels = random_labels(t.graph, 1);
  for (auto k : {AttackKind::BallotStuffing, AttackKind::BadMouthing, AttackKind::SelfPromoting,
                 AttackKind::Whitewashing}) {
    const AttackSpec spec{k, 0.3, 0.0};
    EXPECT_EQ(apply_attack(labels, t.graph, t.truth, spec, 9), labels);
    EXPECT_EQ(apply_trace_attack(t.graph, t.truth, spec, 9), t.graph);
  }
}

TEST(Attacks, BadMouthingMonotoneInIntensity) {
  const auto t = generate_trace(small_config());
  const auto labels = random_labels(t.graph, 2);
  std::size_t last = 0;
  for (int step = 0; step <= 20; ++step) {
    const AttackSpec spec{AttackKind::BadMouthing, 0.3, step / 20.0};
    const auto n = changed(labels, apply_attack(labels, t.graph, t.truth, spec, 4));
    EXPECT_GE(n, last) << "intensity " << spec.intensity;
    last = n;
  }
  EXPECT_GT(last, 0u);
}

TEST(Attacks, BadMouthingFullRewrite) {
  const auto t = generate_trace(small_config());
  const auto labels = random_labels(t.graph, 3);
  // 0.96 of 30 rounds to 29 attackers: everyone but one node.
  const AttackSpec spec{AttackKind::BadMouthing, 0.96, 1.0};
  const auto attackers = select_attackers(t.truth, spec.attacker_fraction, 7);
  const auto out = apply_attack(labels, t.graph, t.truth, spec, 7);
  for (const auto& [pair, label] : out) {
    const bool attacker = std::binary_search(attackers.begin(), attackers.end(), pair.trustor);
    if (attacker && t.truth.honest[pair.trustee]) {
      ASSERT_EQ(label, TrustLabel::Untrustworthy);
    } else {
      ASSERT_EQ(label, labels.at(pair));
    }
  }
}

TEST(Attacks, BallotStuffingFlipsCeilHalf) {
  const auto t = generate_trace(small_config());
  LabelTable labels;
  for (const auto& p : interacting_pairs(t.graph)) labels[p] = TrustLabel::Untrustworthy;
  const AttackSpec spec{AttackKind::BallotStuffing, 0.3, 0.5};
  const auto out = apply_attack(labels, t.graph, t.truth, spec, 11);
  for (NodeId a : select_attackers(t.truth, 0.3, 11)) {
    std::size_t k = 0, flipped = 0;
    for (NodeId j = 0; j < t.graph.node_count(); ++j) {
      if (j == a || !labels.contains({a, j})) continue;
      if (t.truth.honest[j]) {
        ASSERT_EQ(out.at({a, j}), TrustLabel::Untrustworthy);
        continue;
      }
      ++k;
      flipped += out.at({a, j}) == TrustLabel::Trustworthy ? 1 : 0;
    }
    EXPECT_EQ(flipped, static_cast<std::size_t>(std::ceil(0.5 * static_cast<double>(k)))) << "attacker " << a;
  }
  EXPECT_EQ(out, apply_attack(labels, t.graph, t.truth, spec, 11));
}

TEST(Attacks, TraceKindsLeaveLabelsAlone) {
  const auto t = generate_trace(small_config());
  const auto labels = random_labels(t.graph, 5);
  EXPECT_EQ(apply_attack(labels, t.graph, t.truth, {AttackKind::Whitewashing, 0.3, 1.0}, 1), labels);
  EXPECT_EQ(apply_trace_attack(t.graph, t.truth, {AttackKind::BadMouthing, 0.3, 1.0}, 1), t.graph);
}

TEST(Attacks, SelfPromotingTurnsFailuresIntoSuccesses) {
  const auto t = generate_trace(small_config());
  const AttackSpec spec{AttackKind::SelfPromoting, 0.2, 1.0};
  const auto attackers = select_attackers(t.truth, 0.2, 2);
  const auto out = apply_trace_attack(t.graph, t.truth, spec, 2);
  ASSERT_EQ(out.interactions().size(), t.graph.interactions().size());
  for (std::size_t k = 0; k < out.interactions().size(); ++k) {
    const auto& before = t.graph.interactions()[k];
    const auto& after = out.interactions()[k];
    const bool served_by_attacker = std::binary_search(attackers.begin(), attackers.end(), before.target);
    EXPECT_EQ(after.success, served_by_attacker ? true : before.success);
  }
}

TEST(Attacks, WhitewashingDropsOldestHistory) {
  const auto t = generate_trace(small_config());
  const AttackSpec spec{AttackKind::Whitewashing, 0.1, 0.5};
  const auto attackers = select_attackers(t.truth, 0.1, 3);
  ASSERT_FALSE(attackers.empty());
  const auto out = apply_trace_attack(t.graph, t.truth, spec, 3);
  EXPECT_LT(out.interactions().size(), t.graph.interactions().size());
  if (attackers.size() == 1) {
    const NodeId a = attackers[0];
    std::vector<std::int64_t> before, after;
    for (const auto& r : t.graph.interactions()) {
      if (r.source == a || r.target == a) before.push_back(r.timestamp);
    }
    for (const auto& r : out.interactions()) {
      if (r.source == a || r.target == a) after.push_back(r.timestamp);
    }
    EXPECT_EQ(after.size(), before.size() - before.size() / 2);
    EXPECT_TRUE(std::equal(after.begin(), after.end(), before.end() - static_cast<std::ptrdiff_t>(after.size())));
  }
  const AttackSpec all{AttackKind::Whitewashing, 0.1, 1.0};
  const auto wiped = apply_trace_attack(t.graph, t.truth, all, 3);
  for (const auto& r : wiped.interactions()) {
    for (NodeId a : attackers) ASSERT_TRUE(r.source != a && r.target != a);
  }
}

TEST(Experiment, ReportIsDeterministic) {
  const auto cfg = small_config(4);
  const AttackSpec spec{AttackKind::BallotStuffing, 0.3, 1.0};
  const auto a = run_experiment(cfg, spec, quick_params()).report.to_json();
  const auto b = run_experiment(cfg, spec, quick_params()).report.to_json();
  EXPECT_EQ(a, b);
}

TEST(Experiment, ReportSchema) {
  const auto run = run_experiment(small_config(5), AttackSpec{AttackKind::BadMouthing, 0.2, 0.5}, quick_params());
  const auto doc = nlohmann::json::parse(run.report.to_json());
  EXPECT_EQ(doc.at("schema_version"), ExperimentReport::kSchemaVersion);
  EXPECT_EQ(doc.at("attack").at("kind"), "bad_mouthing");
  const auto& results = doc.at("results");
  EXPECT_EQ(results.at("theta_sweep").size(), 10u);
  EXPECT_TRUE(results.at("aggregate").contains("false_trust_rate"));
  EXPECT_EQ(results.at("cost_curve").size(), 5u);
  EXPECT_EQ(results.at("cluster_k"), 3);
  double sum = 0.0;
  for (const auto& [name, v] : results.at("feature_importances").items()) sum += v.get<double>();
  EXPECT_NEAR(sum, 1.0, 1e-9);
}

TEST(Experiment, CountsAndMetricsConsistent) {
  const auto run = run_experiment(small_config(6), AttackSpec{}, quick_params());
  const auto& r = run.report;
  EXPECT_EQ(r.pair_count, interacting_pairs(run.trace.graph).size());
  EXPECT_EQ(r.label_counts[0] + r.label_counts[1] + r.label_counts[2], r.pair_count);
  EXPECT_EQ(r.aggregate.evaluated, r.pair_count);
  EXPECT_TRUE(r.attackers.empty());
  EXPECT_EQ(run.verdicts.size(), r.pair_count);
}

TEST(Metrics, Rates) {
  std::vector<PairVerdict> v(4);
  v[0].pair = {0, 1};
  v[0].verdict = TrustVerdict::Trustworthy;
  v[1].pair = {1, 0};
  v[1].verdict = TrustVerdict::Trustworthy;
  v[2].pair = {0, 2};
  v[2].verdict = TrustVerdict::Untrustworthy;
  v[3].pair = {2, 0};
  v[3].verdict = TrustVerdict::Untrustworthy;
  const VerdictTable truth{{{0, 1}, TrustVerdict::Trustworthy},
                           {{1, 0}, TrustVerdict::Untrustworthy},
                           {{0, 2}, TrustVerdict::Trustworthy},
                           {{2, 0}, TrustVerdict::Untrustworthy}};
  const auto m = evaluate_verdicts(v, truth);
  EXPECT_EQ(m.accuracy, 0.5);
  EXPECT_EQ(m.false_trust_rate, 0.5);
  EXPECT_EQ(m.false_distrust_rate, 0.5);
  EXPECT_EQ(m.evaluated, 4u);
}
