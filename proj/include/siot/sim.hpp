#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "siot/aggregate.hpp"
#include "siot/forest.hpp"
#include "siot/graph.hpp"

namespace siot {

/// Synthetic trace generator settings. Defaults give a 76-node, 18,226
/// interaction, four-day trace.
struct SimConfig {
  std::size_t node_count = 76;
  double malicious_fraction = 0.2;
  std::size_t community_count = 16;
  std::size_t interaction_count = 18226;
  std::int64_t duration = 4 * 24 * 3600;
  std::uint64_t rng_seed = 1;

  std::size_t max_memberships = 3;
  double friend_prob_shared = 0.6;    // pairs sharing a community
  double friend_prob_other = 0.1;     // pairs sharing none
  /// Honest-malicious pairs. Attackers befriend widely to get into the
  /// recommendation paths of honest pairs.
  double friend_prob_mixed = 0.33;
  double friend_prob_malicious = 0.05;  // malicious-malicious pairs
  double friend_interaction_weight = 3.0;

  double honest_success = 0.95;
  double malicious_success = 0.2;
  /// Success probability between two malicious nodes. Raise it to model
  /// colluders that serve each other well.
  double collusion_success = 0.2;
  std::int64_t max_messages = 10;
  /// Multiplier on the message volume a malicious node pushes to an honest one.
  double malicious_message_skew = 4.0;

  /// Throws ConfigError when the settings cannot produce a valid trace.
  void validate() const;
};

enum class AttackKind { None, BallotStuffing, BadMouthing, SelfPromoting, Whitewashing };

std::string_view attack_name(AttackKind kind);
/// Throws ConfigError for unknown names.
AttackKind parse_attack(std::string_view name);

struct AttackSpec {
  AttackKind kind = AttackKind::None;
  double attacker_fraction = 0.0;
  double intensity = 0.0;

  void validate() const;
};

struct GroundTruth {
  std::vector<bool> honest;  // indexed by NodeId

  /// Honest trustee: trustworthy. Malicious trustee: untrustworthy. The
  /// trustor's own honesty does not matter.
  TrustVerdict expected(NodeId /*trustor*/, NodeId trustee) const {
    return honest.at(trustee) ? TrustVerdict::Trustworthy : TrustVerdict::Untrustworthy;
  }
  VerdictTable pair_table(const SocialGraph& graph) const;
};

struct SimTrace {
  SocialGraph graph;
  GroundTruth truth;
};

SimTrace generate_trace(const SimConfig& cfg);

/// Writes the four trace CSVs plus `ground_truth.csv`
/// (`trustor,trustee,expected`, interacting pairs) and
/// `ground_truth_nodes.csv` (`node_id,honest`).
void write_sim_output(const SimTrace& trace, const std::string& dir);

VerdictTable read_ground_truth_csv(const std::string& path, const SocialGraph& graph);

/// round(attacker_fraction * N) attackers, malicious nodes first (in seeded
/// order), then honest ones. Sorted ascending.
std::vector<NodeId> select_attackers(const GroundTruth& truth, double attacker_fraction,
                                     std::uint64_t rng_seed);

/// Recommendation-level attacks. For each attacker a, take its opinions
/// (a, j) toward targets of the attacked kind and rewrite ceil(intensity * k)
/// of them (seeded choice): ballot stuffing sets opinions on malicious
/// targets to trustworthy, bad mouthing sets opinions on honest targets to
/// untrustworthy. Trace-level kinds leave labels unchanged.
LabelTable apply_attack(const LabelTable& labels, const SocialGraph& graph,
                        const GroundTruth& truth, const AttackSpec& spec,
                        std::uint64_t rng_seed);

/// Trace-level attacks. Self-promoting flips ceil(intensity * k) of the
/// failed records served by each attacker to successes; whitewashing drops
/// the oldest floor(intensity * k) records that involve each attacker.
/// Recommendation-level kinds return the graph unchanged.
SocialGraph apply_trace_attack(const SocialGraph& graph, const GroundTruth& truth,
                               const AttackSpec& spec, std::uint64_t rng_seed);

enum class DirectSource { Forest, KMeans };

struct PipelineParams {
  double theta = 0.7;
  std::size_t k_min = 1;
  std::size_t k_max = 8;
  KMeansOptions kmeans;
  ForestParams forest;
  double train_fraction = 0.8;
  DirectSource direct_source = DirectSource::Forest;
  std::vector<double> sweep_thetas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
};

struct VerdictMetrics {
  double accuracy = 0.0;
  double false_trust_rate = 0.0;     // expected untrustworthy, judged trustworthy
  double false_distrust_rate = 0.0;  // expected trustworthy, judged untrustworthy
  std::size_t evaluated = 0;
};

VerdictMetrics evaluate_verdicts(std::span<const PairVerdict> verdicts, const VerdictTable& truth);

struct SweepMetrics {
  double theta = 0.0;
  VerdictMetrics metrics;
};

struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;

  SimConfig config;
  AttackSpec attack;
  PipelineParams params;
  std::vector<NodeId> attackers;
  std::size_t pair_count = 0;
  std::vector<double> cost_curve;
  std::size_t elbow_k = 0;
  std::array<std::size_t, kLabelCount> label_counts{};
  double forest_held_out_accuracy = 0.0;
  double forest_train_accuracy = 0.0;
  std::array<double, kFeatureCount> importances{};
  VerdictMetrics direct_only;
  VerdictMetrics aggregate;
  std::vector<SweepMetrics> sweep;

  std::string to_json() const;
};

/// Everything an experiment produced, for callers that need more than the
/// report (acceptance checks, CLI plot output).
struct ExperimentRun {
  ExperimentReport report;
  SimTrace trace;
  FeatureTable features;
  std::vector<TrustLabel> cluster_labels;  // per feature row
  std::vector<PairVerdict> verdicts;
};

/// Trace -> features -> elbow + 3-means labels -> forest -> recommendation
/// fusion -> metrics against the planted truth. All randomness comes from
/// cfg.rng_seed.
ExperimentRun run_experiment(const SimConfig& cfg, const AttackSpec& attack,
                             const PipelineParams& params);

/// Pipeline over an already generated trace.
ExperimentRun run_pipeline(SimTrace trace, const SimConfig& cfg, const AttackSpec& attack,
                           const PipelineParams& params);

}  // namespace siot
