#include "siot/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "siot/csv.hpp"
#include "siot/error.hpp"

namespace siot {

std::string_view feature_name(Feature f) { return kFeatureNames[static_cast<std::size_t>(f)]; }

Feature parse_feature(std::string_view name) {
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    if (kFeatureNames[k] == name) return static_cast<Feature>(k);
  }
  throw ConfigError("unknown feature '" + std::string(name) + "'");
}

BaselineWeights::BaselineWeights(double w_fs, double w_coi, double w_cop, double w_reward)
    : w_{w_fs, w_coi, w_cop, w_reward} {
  double sum = 0.0;
  for (double w : w_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("baseline weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("baseline weights must sum to 1");
}

double friendship_similarity(const SocialGraph& graph, NodeId i, NodeId j) {
  const auto& fi = graph.friends(i);
  const auto& fj = graph.friends(j);
  if (fi.size() <= 1) return 0.0;
  std::size_t shared = 0;
  auto a = fi.begin();
  auto b = fj.begin();
  while (a != fi.end() && b != fj.end()) {
    if (*a < *b) {
      ++a;
    } else if (*b < *a) {
      ++b;
    } else {
      ++shared;
      ++a;
      ++b;
    }
  }
  const double v = static_cast<double>(shared) / static_cast<double>(fi.size() - 1);
  return std::clamp(v, 0.0, 1.0);
}

double community_of_interest(const SocialGraph& graph, NodeId i, NodeId j) {
  const auto& ci = graph.communities(i);
  const auto& cj = graph.communities(j);
  if (ci.empty()) return 0.0;
  std::size_t shared = 0;
  for (CommunityId c : ci) {
    if (std::binary_search(cj.begin(), cj.end(), c)) ++shared;
  }
  return static_cast<double>(shared) / static_cast<double>(ci.size());
}

double binary_entropy(double p) {
  double h = 0.0;
  if (p > 0.0) h -= p * std::log2(p);
  if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
  return std::clamp(h, 0.0, 1.0);
}

double cooperativeness(const SocialGraph& graph, NodeId i, NodeId j) {
  const auto h = graph.history(i, j);
  if (!h) return 0.0;
  const std::int64_t total = h->messages_low_to_high + h->messages_high_to_low;
  if (total == 0) return 0.0;
  // H(p) = H(1-p); always taking the low-to-high share keeps (i,j) and (j,i)
  // bit-identical.
  return binary_entropy(static_cast<double>(h->messages_low_to_high) / static_cast<double>(total));
}

double reward_score(std::int64_t interactions, std::int64_t failures) {
  if (interactions <= 0) throw UndefinedFeatureError("reward is undefined without interactions");
  const double n = static_cast<double>(interactions);
  const double u = static_cast<double>(failures);
  return std::abs(n - u) / n * std::exp(-(u / n));
}

double reward(const SocialGraph& graph, NodeId i, NodeId j) {
  const auto h = graph.history(i, j);
  if (!h) {
    throw UndefinedFeatureError("no interactions between nodes " + std::to_string(i) + " and " +
                                std::to_string(j));
  }
  return reward_score(h->interactions, h->failures);
}

TrustFeatureVector feature_vector(const SocialGraph& graph, NodeId i, NodeId j) {
  TrustFeatureVector v;
  v.t_reward = reward(graph, i, j);
  v.t_fs = friendship_similarity(graph, i, j);
  v.t_coi = community_of_interest(graph, i, j);
  v.t_cop = cooperativeness(graph, i, j);
  return v;
}

double baseline_weighted_trust(const TrustFeatureVector& v, const BaselineWeights& w) {
  const auto x = v.as_array();
  const auto& ws = w.values();
  double s = 0.0;
  for (std::size_t k = 0; k < kFeatureCount; ++k) s += ws[k] * x[k];
  return std::clamp(s, 0.0, 1.0);
}

FeatureTable compute_features(const SocialGraph& graph, Execution exec) {
  const auto pairs = interacting_pairs(graph);
  return compute_features(graph, pairs, exec);
}

FeatureTable compute_features(const SocialGraph& graph, std::span<const PairKey> pairs,
                              Execution exec) {
  FeatureTable table;
  table.pairs.assign(pairs.begin(), pairs.end());
  table.rows.resize(pairs.size());
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t k = 0; k < n; ++k) {
      table.rows[k] = feature_vector(graph, pairs[k].trustor, pairs[k].trustee);
    }
    return table;
  }
  // Exceptions cannot leave the parallel region, so undefined pairs are
  // rejected before it.
  for (const auto& p : pairs) {
    if (!graph.history(p.trustor, p.trustee)) (void)reward(graph, p.trustor, p.trustee);
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    table.rows[k] = feature_vector(graph, pairs[k].trustor, pairs[k].trustee);
  }
  return table;
}

std::string features_to_csv(const SocialGraph& graph, const FeatureTable& table) {
  std::ostringstream out;
  out << "trustor,trustee,t_fs,t_coi,t_cop,t_reward\n";
  for (std::size_t k = 0; k < table.pairs.size(); ++k) {
    const auto& p = table.pairs[k];
    const auto& v = table.rows[k];
    out << graph.external_id(p.trustor) << ',' << graph.external_id(p.trustee) << ','
        << csv::fixed6(v.t_fs) << ',' << csv::fixed6(v.t_coi) << ',' << csv::fixed6(v.t_cop)
        << ',' << csv::fixed6(v.t_reward) << '\n';
  }
  return out.str();
}

std::vector<ExternalFeatureRow> read_features_csv(const std::string& path) {
  std::vector<ExternalFeatureRow> out;
  for (const auto& row : csv::read(path, "trustor,trustee,t_fs,t_coi,t_cop,t_reward")) {
    ExternalFeatureRow r;
    r.trustor = csv::to_int(row, 0, path);
    r.trustee = csv::to_int(row, 1, path);
    std::array<double, kFeatureCount> a{};
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      a[k] = csv::to_double(row, 2 + k, path);
      if (!(a[k] >= 0.0 && a[k] <= 1.0)) throw ParseError(path, row.line, "feature outside [0,1]");
    }
    r.features = TrustFeatureVector::from_array(a);
    out.push_back(r);
  }
  return out;
}

}  // namespace siot
