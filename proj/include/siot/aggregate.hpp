#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "siot/execution.hpp"
#include "siot/graph.hpp"
#include "siot/kmeans.hpp"

namespace siot {

/// Recommendation tallies collected from common friends: |T|, |U|, |N|.
struct RecommendationSet {
  std::uint32_t t_count = 0;
  std::uint32_t u_count = 0;
  std::uint32_t n_count = 0;

  std::uint32_t total() const { return t_count + u_count + n_count; }
  friend bool operator==(const RecommendationSet&, const RecommendationSet&) = default;
};

class AggregationConfig {
public:
  AggregationConfig() = default;
  /// Throws ConfigError unless theta is in (0,1].
  explicit AggregationConfig(double theta);

  double theta() const { return theta_; }

private:
  double theta_ = 0.7;
};

enum class TrustVerdict : std::uint8_t { Untrustworthy = 0, Trustworthy = 1 };

inline int to_int(TrustVerdict v) { return static_cast<int>(v); }

/// Direct-trust labels keyed by ordered pair.
using LabelTable = std::unordered_map<PairKey, TrustLabel, PairKeyHash>;
/// Expected binary trust keyed by ordered pair.
using VerdictTable = std::unordered_map<PairKey, TrustVerdict, PairKeyHash>;

/// Tallies labels (r, j) for every common friend r of i and j that has an
/// entry in `labels`. Recommenders without an entry are skipped.
RecommendationSet collect_recommendations(const SocialGraph& graph, const LabelTable& labels,
                                          NodeId i, NodeId j);

/// Fuses a direct label with recommendation counts.
///
/// No recommendations: the direct label decides (neutral counts as
/// untrustworthy). Direct untrustworthy: stays untrustworthy when |U| >= |T|
/// or neutral dominates; otherwise trustworthy iff |T|/(total+1) >= theta.
/// Direct trustworthy: mirror image with |U|. Direct neutral: trustworthy
/// iff |T| > |U|.
TrustVerdict estimate_trust(TrustLabel direct, const RecommendationSet& recs,
                            const AggregationConfig& cfg);

struct PairVerdict {
  PairKey pair;
  TrustLabel direct = TrustLabel::Untrustworthy;
  RecommendationSet recs;
  TrustVerdict verdict = TrustVerdict::Untrustworthy;
};

/// Verdict for every interacting pair, in interacting_pairs() order.
/// `direct` supplies each trustor's own label; `reported` supplies the labels
/// recommenders hand out (they differ only under recommendation attacks).
/// Throws ContractError if an interacting pair has no direct label.
std::vector<PairVerdict> estimate_all(const SocialGraph& graph, const LabelTable& direct,
                                      const LabelTable& reported, const AggregationConfig& cfg,
                                      Execution exec = Execution::Parallel);

std::vector<PairVerdict> estimate_all(const SocialGraph& graph, const LabelTable& labels,
                                      const AggregationConfig& cfg,
                                      Execution exec = Execution::Parallel);

struct SweepPoint {
  double theta = 0.0;
  double accuracy = 0.0;
};

/// Agreement with ground truth for each theta, over interacting pairs that
/// have a ground-truth entry.
std::vector<SweepPoint> theta_sweep(const SocialGraph& graph, const LabelTable& direct,
                                    const LabelTable& reported, const VerdictTable& truth,
                                    std::span<const double> thetas);

std::vector<SweepPoint> theta_sweep(const SocialGraph& graph, const LabelTable& labels,
                                    const VerdictTable& truth, std::span<const double> thetas);

/// Fraction of verdicts matching `truth` (pairs without truth are ignored).
double verdict_accuracy(std::span<const PairVerdict> verdicts, const VerdictTable& truth);

/// CSV `trustor,trustee,direct_label,t_count,u_count,n_count,verdict`.
std::string verdicts_to_csv(const SocialGraph& graph, std::span<const PairVerdict> verdicts);
/// CSV `theta,accuracy`.
std::string sweep_to_csv(std::span<const SweepPoint> sweep);

}  // namespace siot
