#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "siot/execution.hpp"
#include "siot/graph.hpp"

namespace siot {

inline constexpr std::size_t kFeatureCount = 4;

/// Column order used everywhere: FS, CoI, CoP, Reward.
enum class Feature : std::size_t { FriendshipSimilarity = 0, CommunityOfInterest = 1, Cooperativeness = 2, Reward = 3 };

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {"fs", "coi", "cop", "reward"};

std::string_view feature_name(Feature f);
/// Accepts the short column names ("fs", "coi", "cop", "reward").
Feature parse_feature(std::string_view name);

/// Direct-trust features of one ordered pair, each in [0,1].
struct TrustFeatureVector {
  double t_fs = 0.0;
  double t_coi = 0.0;
  double t_cop = 0.0;
  double t_reward = 0.0;

  std::array<double, kFeatureCount> as_array() const { return {t_fs, t_coi, t_cop, t_reward}; }
  static TrustFeatureVector from_array(const std::array<double, kFeatureCount>& a) {
    return {a[0], a[1], a[2], a[3]};
  }
  double operator[](Feature f) const { return as_array()[static_cast<std::size_t>(f)]; }

  friend bool operator==(const TrustFeatureVector&, const TrustFeatureVector&) = default;
};

/// Non-negative weights summing to one, for the weighted-sum baseline.
class BaselineWeights {
public:
  /// Throws ConfigError if any weight is negative or the sum is off by
  /// more than 1e-9.
  BaselineWeights(double w_fs, double w_coi, double w_cop, double w_reward);

  static BaselineWeights uniform() { return {0.25, 0.25, 0.25, 0.25}; }

  const std::array<double, kFeatureCount>& values() const { return w_; }

private:
  std::array<double, kFeatureCount> w_;
};

/// |F_i ∩ F_j| / (|F_i| - 1), clamped to [0,1]; 0 when |F_i| <= 1.
double friendship_similarity(const SocialGraph& graph, NodeId i, NodeId j);

/// |C_i ∩ C_j| / |C_i|; 0 when C_i is empty.
double community_of_interest(const SocialGraph& graph, NodeId i, NodeId j);

/// Binary entropy (log base 2) of the share of the pair's message volume
/// sent by i. 0 when the pair exchanged no messages.
double cooperativeness(const SocialGraph& graph, NodeId i, NodeId j);

/// (|Int - Int_U| / |Int|) * exp(-Int_U / Int) over all interactions of the
/// pair in either direction. Throws UndefinedFeatureError when Int = 0.
double reward(const SocialGraph& graph, NodeId i, NodeId j);

double binary_entropy(double p);
double reward_score(std::int64_t interactions, std::int64_t failures);

TrustFeatureVector feature_vector(const SocialGraph& graph, NodeId i, NodeId j);

/// Weighted-sum aggregate kept as the comparison baseline.
double baseline_weighted_trust(const TrustFeatureVector& v, const BaselineWeights& w);

/// Features for a list of pairs; row k belongs to pairs[k].
struct FeatureTable {
  std::vector<PairKey> pairs;
  std::vector<TrustFeatureVector> rows;
};

/// Features for every interacting pair. The parallel path evaluates pairs
/// with OpenMP; output is identical to the serial path.
FeatureTable compute_features(const SocialGraph& graph, Execution exec = Execution::Parallel);
FeatureTable compute_features(const SocialGraph& graph, std::span<const PairKey> pairs,
                              Execution exec = Execution::Parallel);

/// CSV: header `trustor,trustee,t_fs,t_coi,t_cop,t_reward`, six decimals,
/// external node ids.
std::string features_to_csv(const SocialGraph& graph, const FeatureTable& table);

/// Reads a feature CSV back. Node ids are returned as written (external).
struct ExternalFeatureRow {
  std::int64_t trustor = 0;
  std::int64_t trustee = 0;
  TrustFeatureVector features;
};
std::vector<ExternalFeatureRow> read_features_csv(const std::string& path);

}  // namespace siot
