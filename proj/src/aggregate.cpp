#include "siot/aggregate.hpp"

#include <sstream>

#include "siot/csv.hpp"
#include "siot/error.hpp"

namespace siot {

AggregationConfig::AggregationConfig(double theta) : theta_(theta) {
  if (!(theta > 0.0 && theta <= 1.0)) {
    throw ConfigError("theta must be in (0,1], got " + csv::exact(theta));
  }
}

RecommendationSet collect_recommendations(const SocialGraph& graph, const LabelTable& labels,
                                          NodeId i, NodeId j) {
  RecommendationSet recs;
  for (NodeId r : common_friends(graph, i, j)) {
    auto it = labels.find({r, j});
    if (it == labels.end()) continue;
    switch (it->second) {
      case TrustLabel::Trustworthy: ++recs.t_count; break;
      case TrustLabel::Untrustworthy: ++recs.u_count; break;
      case TrustLabel::Neutral: ++recs.n_count; break;
    }
  }
  return recs;
}

TrustVerdict estimate_trust(TrustLabel direct, const RecommendationSet& recs,
                            const AggregationConfig& cfg) {
  const std::uint32_t t = recs.t_count;
  const std::uint32_t u = recs.u_count;
  const std::uint32_t n = recs.n_count;
  const double denominator = static_cast<double>(recs.total()) + 1.0;

  if (recs.total() == 0) {
    return direct == TrustLabel::Trustworthy ? TrustVerdict::Trustworthy : TrustVerdict::Untrustworthy;
  }
  const bool neutral_dominates = n >= t && n >= u;
  switch (direct) {
    case TrustLabel::Untrustworthy: {
      if (u >= t || neutral_dominates) return TrustVerdict::Untrustworthy;
      const double p_trust = static_cast<double>(t) / denominator;
      return p_trust >= cfg.theta() ? TrustVerdict::Trustworthy : TrustVerdict::Untrustworthy;
    }
    case TrustLabel::Trustworthy: {
      if (t >= u || neutral_dominates) return TrustVerdict::Trustworthy;
      const double p_untrust = static_cast<double>(u) / denominator;
      return p_untrust >= cfg.theta() ? TrustVerdict::Untrustworthy : TrustVerdict::Trustworthy;
    }
    case TrustLabel::Neutral:
      return t > u ? TrustVerdict::Trustworthy : TrustVerdict::Untrustworthy;
  }
  throw ContractError("invalid direct trust label");
}

std::vector<PairVerdict> estimate_all(const SocialGraph& graph, const LabelTable& direct,
                                      const LabelTable& reported, const AggregationConfig& cfg,
                                      Execution exec) {
  const auto pairs = interacting_pairs(graph);
  std::vector<PairVerdict> out(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    auto it = direct.find(pairs[k]);
    if (it == direct.end()) {
      throw ContractError("no direct trust label for interacting pair (" +
                          std::to_string(graph.external_id(pairs[k].trustor)) + "," +
                          std::to_string(graph.external_id(pairs[k].trustee)) + ")");
    }
    out[k].pair = pairs[k];
    out[k].direct = it->second;
  }
  auto fuse = [&](std::size_t k) {
    auto& v = out[k];
    v.recs = collect_recommendations(graph, reported, v.pair.trustor, v.pair.trustee);
    v.verdict = estimate_trust(v.direct, v.recs, cfg);
  };
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t k = 0; k < n; ++k) fuse(static_cast<std::size_t>(k));
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < n; ++k) fuse(static_cast<std::size_t>(k));
  }
  return out;
}

std::vector<PairVerdict> estimate_all(const SocialGraph& graph, const LabelTable& labels,
                                      const AggregationConfig& cfg, Execution exec) {
  return estimate_all(graph, labels, labels, cfg, exec);
}

double verdict_accuracy(std::span<const PairVerdict> verdicts, const VerdictTable& truth) {
  std::size_t seen = 0, hit = 0;
  for (const auto& v : verdicts) {
    auto it = truth.find(v.pair);
    if (it == truth.end()) continue;
    ++seen;
    hit += it->second == v.verdict ? 1 : 0;
  }
  return seen == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(seen);
}

std::vector<SweepPoint> theta_sweep(const SocialGraph& graph, const LabelTable& direct,
                                    const LabelTable& reported, const VerdictTable& truth,
                                    std::span<const double> thetas) {
  // Recommendations do not depend on theta; collect them once.
  auto base = estimate_all(graph, direct, reported, AggregationConfig{});
  std::vector<SweepPoint> out;
  for (double theta : thetas) {
    const AggregationConfig cfg(theta);
    for (auto& v : base) v.verdict = estimate_trust(v.direct, v.recs, cfg);
    out.push_back({theta, verdict_accuracy(base, truth)});
  }
  return out;
}

std::vector<SweepPoint> theta_sweep(const SocialGraph& graph, const LabelTable& labels,
                                    const VerdictTable& truth, std::span<const double> thetas) {
  return theta_sweep(graph, labels, labels, truth, thetas);
}

std::string verdicts_to_csv(const SocialGraph& graph, std::span<const PairVerdict> verdicts) {
  std::ostringstream out;
  out << "trustor,trustee,direct_label,t_count,u_count,n_count,verdict\n";
  for (const auto& v : verdicts) {
    out << graph.external_id(v.pair.trustor) << ',' << graph.external_id(v.pair.trustee) << ','
        << to_int(v.direct) << ',' << v.recs.t_count << ',' << v.recs.u_count << ','
        << v.recs.n_count << ',' << to_int(v.verdict) << '\n';
  }
  return out.str();
}

std::string sweep_to_csv(std::span<const SweepPoint> sweep) {
  std::ostringstream out;
  out << "theta,accuracy\n";
  for (const auto& p : sweep) out << csv::fixed6(p.theta) << ',' << csv::fixed6(p.accuracy) << '\n';
  return out.str();
}

}  // namespace siot
