#include "siot/sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "siot/csv.hpp"
#include "siot/error.hpp"
#include "siot/rng.hpp"

namespace siot {
namespace {

// Stream ids for mix_seed(). Trace generation and each pipeline stage draw
// from their own stream of the one experiment seed.
enum Stream : std::uint64_t {
  kRoles = 1,
  kMemberships = 2,
  kFriendships = 3,
  kInteractions = 4,
  kAttack = 11,
  kClustering = 12,
  kSplit = 13,
};

bool in_unit(double p) { return p >= 0.0 && p <= 1.0; }

std::size_t ceil_count(double intensity, std::size_t k) {
  // Guard against 0.5 * 6 landing a hair above 3.
  return static_cast<std::size_t>(std::ceil(intensity * static_cast<double>(k) - 1e-9));
}

SocialGraph rebuild(const SocialGraph& g, std::vector<InteractionRecord> records) {
  std::vector<SocialGraph::FriendEdge> edges;
  std::vector<SocialGraph::Membership> memberships;
  std::vector<std::int64_t> ids(g.node_count());
  for (NodeId i = 0; i < g.node_count(); ++i) {
    ids[i] = g.external_id(i);
    for (NodeId f : g.friends(i)) {
      if (f > i) edges.push_back({i, f});
    }
    for (CommunityId c : g.communities(i)) memberships.push_back({i, c});
  }
  std::vector<std::string> names(g.community_count());
  for (CommunityId c = 0; c < g.community_count(); ++c) names[c] = g.community_name(c);
  SocialGraph out = SocialGraph::build(g.node_count(), edges, memberships, std::move(records));
  out.set_external_names(std::move(ids), std::move(names));
  return out;
}

}  // namespace

void SimConfig::validate() const {
  if (node_count < 2) throw ConfigError("node_count must be at least 2");
  if (interaction_count < 1) throw ConfigError("interaction_count must be at least 1");
  if (community_count < 1) throw ConfigError("community_count must be at least 1");
  if (max_memberships < 1) throw ConfigError("max_memberships must be at least 1");
  if (!(malicious_fraction >= 0.0 && malicious_fraction < 1.0)) {
    throw ConfigError("malicious_fraction must be in [0,1)");
  }
  if (duration < 1) throw ConfigError("duration must be positive");
  if (max_messages < 1) throw ConfigError("max_messages must be positive");
  for (double p : {friend_prob_shared, friend_prob_other, friend_prob_mixed,
                   friend_prob_malicious, honest_success,
                   malicious_success, collusion_success}) {
    if (!in_unit(p)) throw ConfigError("probabilities must be in [0,1]");
  }
  if (!(friend_interaction_weight > 0.0)) throw ConfigError("friend_interaction_weight must be positive");
  if (!(malicious_message_skew >= 1.0)) throw ConfigError("malicious_message_skew must be >= 1");
}

std::string_view attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::None: return "none";
    case AttackKind::BallotStuffing: return "ballot_stuffing";
    case AttackKind::BadMouthing: return "bad_mouthing";
    case AttackKind::SelfPromoting: return "self_promoting";
    case AttackKind::Whitewashing: return "whitewashing";
  }
  return "none";
}

AttackKind parse_attack(std::string_view name) {
  for (AttackKind k : {AttackKind::None, AttackKind::BallotStuffing, AttackKind::BadMouthing,
                       AttackKind::SelfPromoting, AttackKind::Whitewashing}) {
    if (attack_name(k) == name) return k;
  }
  throw ConfigError("unknown attack kind '" + std::string(name) + "'");
}

void AttackSpec::validate() const {
  if (!(attacker_fraction >= 0.0 && attacker_fraction < 1.0)) {
    throw ConfigError("attacker_fraction must be in [0,1)");
  }
  if (!in_unit(intensity)) throw ConfigError("intensity must be in [0,1]");
}

VerdictTable GroundTruth::pair_table(const SocialGraph& graph) const {
  VerdictTable table;
  for (const auto& p : interacting_pairs(graph)) table[p] = expected(p.trustor, p.trustee);
  return table;
}

SimTrace generate_trace(const SimConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.node_count;

  SimTrace out;
  out.truth.honest.assign(n, true);
  {
    Rng rng(mix_seed(cfg.rng_seed, kRoles));
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    rng.shuffle(ids);
    const auto bad = static_cast<std::size_t>(std::llround(cfg.malicious_fraction * static_cast<double>(n)));
    for (std::size_t k = 0; k < std::min(bad, n); ++k) out.truth.honest[ids[k]] = false;
  }
  const auto& honest = out.truth.honest;

  std::vector<SocialGraph::Membership> memberships;
  std::vector<std::vector<CommunityId>> groups(n);
  {
    Rng rng(mix_seed(cfg.rng_seed, kMemberships));
    const std::size_t cap = std::min(cfg.max_memberships, cfg.community_count);
    std::vector<CommunityId> all(cfg.community_count);
    std::iota(all.begin(), all.end(), CommunityId{0});
    for (NodeId i = 0; i < n; ++i) {
      const auto count = static_cast<std::size_t>(rng.between(1, static_cast<std::int64_t>(cap)));
      for (std::size_t k = 0; k < count; ++k) std::swap(all[k], all[k + rng.index(all.size() - k)]);
      groups[i].assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
      std::sort(groups[i].begin(), groups[i].end());
      for (CommunityId c : groups[i]) memberships.push_back({i, c});
    }
  }

  std::vector<SocialGraph::FriendEdge> edges;
  std::vector<std::vector<bool>> friend_of(n, std::vector<bool>(n, false));
  {
    Rng rng(mix_seed(cfg.rng_seed, kFriendships));
    for (NodeId i = 0; i < n; ++i) {
      for (NodeId j = i + 1; j < n; ++j) {
        std::vector<CommunityId> shared;
        std::set_intersection(groups[i].begin(), groups[i].end(), groups[j].begin(),
                              groups[j].end(), std::back_inserter(shared));
        double p = shared.empty() ? cfg.friend_prob_other : cfg.friend_prob_shared;
        if (honest[i] != honest[j]) p = cfg.friend_prob_mixed;
        if (!honest[i] && !honest[j]) p = cfg.friend_prob_malicious;
        if (rng.bernoulli(p)) {
          edges.push_back({i, j});
          friend_of[i][j] = friend_of[j][i] = true;
        }
      }
    }
  }

  std::vector<InteractionRecord> records;
  records.reserve(cfg.interaction_count);
  {
    Rng rng(mix_seed(cfg.rng_seed, kInteractions));
    std::vector<std::vector<double>> cumulative(n, std::vector<double>(n, 0.0));
    for (NodeId s = 0; s < n; ++s) {
      double acc = 0.0;
      for (NodeId t = 0; t < n; ++t) {
        if (t != s) acc += friend_of[s][t] ? cfg.friend_interaction_weight : 1.0;
        cumulative[s][t] = acc;
      }
    }
    auto success_prob = [&](bool hs, bool ht) {
      return hs && ht ? cfg.honest_success : (!hs && !ht) ? cfg.collusion_success : cfg.malicious_success;
    };
    while (records.size() < cfg.interaction_count) {
      InteractionRecord r;
      r.source = static_cast<NodeId>(rng.index(n));
      const auto& cum = cumulative[r.source];
      const double pick = rng.uniform() * cum.back();
      // The source has zero weight, so upper_bound never lands on it.
      const auto it = std::upper_bound(cum.begin(), cum.end(), pick);
      r.target = static_cast<NodeId>(it - cum.begin());
      r.timestamp = rng.between(0, cfg.duration - 1);
      r.messages = rng.between(1, cfg.max_messages);
      const bool hs = honest[r.source];
      const bool ht = honest[r.target];
      if (!hs && ht) {
        r.messages = std::llround(static_cast<double>(r.messages) * cfg.malicious_message_skew);
      }
      r.success = rng.bernoulli(success_prob(hs, ht));
      records.push_back(r);
    }
  }

  out.graph = SocialGraph::build(n, edges, memberships, std::move(records));
  return out;
}

void write_sim_output(const SimTrace& trace, const std::string& dir) {
  std::filesystem::create_directories(dir);
  write_trace(trace.graph, TracePaths::in_directory(dir));
  const std::filesystem::path base(dir);
  std::ostringstream pairs, nodes;
  pairs << "trustor,trustee,expected\n";
  for (const auto& p : interacting_pairs(trace.graph)) {
    pairs << trace.graph.external_id(p.trustor) << ',' << trace.graph.external_id(p.trustee) << ','
          << to_int(trace.truth.expected(p.trustor, p.trustee)) << '\n';
  }
  nodes << "node_id,honest\n";
  for (NodeId i = 0; i < trace.graph.node_count(); ++i) {
    nodes << trace.graph.external_id(i) << ',' << (trace.truth.honest[i] ? 1 : 0) << '\n';
  }
  csv::write_file((base / "ground_truth.csv").string(), pairs.str());
  csv::write_file((base / "ground_truth_nodes.csv").string(), nodes.str());
}

VerdictTable read_ground_truth_csv(const std::string& path, const SocialGraph& graph) {
  VerdictTable table;
  for (const auto& row : csv::read(path, "trustor,trustee,expected")) {
    const auto a = graph.find_external(csv::to_int(row, 0, path));
    const auto b = graph.find_external(csv::to_int(row, 1, path));
    if (!a || !b) throw IntegrityError(path + ":" + std::to_string(row.line) + ": unknown node id");
    const auto e = csv::to_int(row, 2, path);
    if (e != 0 && e != 1) throw ParseError(path, row.line, "expected must be 0 or 1");
    table[{*a, *b}] = e == 1 ? TrustVerdict::Trustworthy : TrustVerdict::Untrustworthy;
  }
  return table;
}

std::vector<NodeId> select_attackers(const GroundTruth& truth, double attacker_fraction,
                                     std::uint64_t rng_seed) {
  const std::size_t n = truth.honest.size();
  const auto count = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(attacker_fraction * static_cast<double>(n))));
  std::vector<NodeId> bad, good;
  for (NodeId i = 0; i < n; ++i) (truth.honest[i] ? good : bad).push_back(i);
  Rng rng(rng_seed);
  rng.shuffle(bad);
  rng.shuffle(good);
  std::vector<NodeId> out(bad.begin(), bad.begin() + static_cast<std::ptrdiff_t>(std::min(count, bad.size())));
  for (std::size_t k = 0; out.size() < count; ++k) out.push_back(good[k]);
  std::sort(out.begin(), out.end());
  return out;
}

LabelTable apply_attack(const LabelTable& labels, const SocialGraph& graph,
                        const GroundTruth& truth, const AttackSpec& spec,
                        std::uint64_t rng_seed) {
  spec.validate();
  LabelTable out = labels;
  if (spec.kind != AttackKind::BallotStuffing && spec.kind != AttackKind::BadMouthing) return out;
  if (spec.intensity <= 0.0) return out;

  const bool stuffing = spec.kind == AttackKind::BallotStuffing;
  const TrustLabel forged = stuffing ? TrustLabel::Trustworthy : TrustLabel::Untrustworthy;
  for (NodeId a : select_attackers(truth, spec.attacker_fraction, rng_seed)) {
    std::vector<NodeId> targets;
    for (NodeId j = 0; j < graph.node_count(); ++j) {
      if (j == a || truth.honest.at(j) == stuffing) continue;
      if (labels.contains({a, j})) targets.push_back(j);
    }
    Rng rng(mix_seed(rng_seed, 100 + a));
    rng.shuffle(targets);
    const std::size_t m = std::min(targets.size(), ceil_count(spec.intensity, targets.size()));
    for (std::size_t k = 0; k < m; ++k) out[{a, targets[k]}] = forged;
  }
  return out;
}

SocialGraph apply_trace_attack(const SocialGraph& graph, const GroundTruth& truth,
                               const AttackSpec& spec, std::uint64_t rng_seed) {
  spec.validate();
  if (spec.kind != AttackKind::SelfPromoting && spec.kind != AttackKind::Whitewashing) return graph;
  if (spec.intensity <= 0.0) return graph;

  std::vector<InteractionRecord> records = graph.interactions();
  std::vector<bool> drop(records.size(), false);
  for (NodeId a : select_attackers(truth, spec.attacker_fraction, rng_seed)) {
    std::vector<std::size_t> touched;
    for (std::size_t k = 0; k < records.size(); ++k) {
      const auto& r = records[k];
      if (spec.kind == AttackKind::SelfPromoting) {
        if (r.target == a && !r.success) touched.push_back(k);
      } else if (r.source == a || r.target == a) {
        touched.push_back(k);
      }
    }
    if (spec.kind == AttackKind::SelfPromoting) {
      Rng rng(mix_seed(rng_seed, 100 + a));
      rng.shuffle(touched);
      const std::size_t m = std::min(touched.size(), ceil_count(spec.intensity, touched.size()));
      for (std::size_t k = 0; k < m; ++k) records[touched[k]].success = true;
    } else {
      // records are already in time order
      const auto m = static_cast<std::size_t>(std::floor(spec.intensity * static_cast<double>(touched.size()) + 1e-9));
      for (std::size_t k = 0; k < m; ++k) drop[touched[k]] = true;
    }
  }
  std::vector<InteractionRecord> kept;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (!drop[k]) kept.push_back(records[k]);
  }
  return rebuild(graph, std::move(kept));
}

VerdictMetrics evaluate_verdicts(std::span<const PairVerdict> verdicts, const VerdictTable& truth) {
  std::size_t seen = 0, hit = 0, neg = 0, pos = 0, false_trust = 0, false_distrust = 0;
  for (const auto& v : verdicts) {
    auto it = truth.find(v.pair);
    if (it == truth.end()) continue;
    ++seen;
    if (it->second == v.verdict) ++hit;
    if (it->second == TrustVerdict::Untrustworthy) {
      ++neg;
      if (v.verdict == TrustVerdict::Trustworthy) ++false_trust;
    } else {
      ++pos;
      if (v.verdict == TrustVerdict::Untrustworthy) ++false_distrust;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  return {ratio(hit, seen), ratio(false_trust, neg), ratio(false_distrust, pos), seen};
}

ExperimentRun run_pipeline(SimTrace trace, const SimConfig& cfg, const AttackSpec& attack,
                           const PipelineParams& params) {
  attack.validate();
  const AggregationConfig agg(params.theta);
  const std::uint64_t seed = cfg.rng_seed;

  ExperimentRun run;
  run.trace.truth = trace.truth;
  run.trace.graph = apply_trace_attack(trace.graph, trace.truth, attack, mix_seed(seed, kAttack));
  const SocialGraph& graph = run.trace.graph;
  auto& report = run.report;
  report.config = cfg;
  report.attack = attack;
  report.params = params;
  if (attack.kind != AttackKind::None) {
    report.attackers = select_attackers(trace.truth, attack.attacker_fraction, mix_seed(seed, kAttack));
  }

  run.features = compute_features(graph);
  report.pair_count = run.features.pairs.size();
  std::vector<Point> points;
  points.reserve(run.features.rows.size());
  for (const auto& v : run.features.rows) points.push_back(v.as_array());

  const std::size_t distinct = distinct_count(points);
  if (distinct < 3) throw InfeasibleError("fewer than 3 distinct feature vectors; cannot form 3 clusters");
  const std::size_t k_max = std::min(params.k_max, distinct);
  const std::uint64_t cluster_seed = mix_seed(seed, kClustering);
  report.cost_curve = cost_curve(points, params.k_min, k_max, cluster_seed, params.kmeans);
  report.elbow_k = elbow_from_curve(report.cost_curve, params.k_min);
  // Same seed as the k = 3 point of the curve, so the labeling clustering is
  // exactly the one whose cost appears there.
  const auto clustering = kmeans_best_of(points, 3, mix_seed(cluster_seed, 1003), params.kmeans);
  run.cluster_labels = label_clusters(clustering);
  for (auto l : run.cluster_labels) ++report.label_counts[static_cast<std::size_t>(l)];

  const auto trained = train_forest(points, run.cluster_labels,
                                    {params.train_fraction, mix_seed(seed, kSplit)}, params.forest);
  report.forest_held_out_accuracy = trained.held_out_accuracy;
  report.forest_train_accuracy = trained.train_accuracy;
  report.importances = trained.model.feature_importances;

  const auto direct_labels = params.direct_source == DirectSource::Forest
                                 ? predict_all(trained.model, points)
                                 : run.cluster_labels;
  LabelTable direct;
  for (std::size_t k = 0; k < run.features.pairs.size(); ++k) direct[run.features.pairs[k]] = direct_labels[k];
  const LabelTable reported = apply_attack(direct, graph, trace.truth, attack, mix_seed(seed, kAttack));
  const VerdictTable truth = trace.truth.pair_table(graph);

  run.verdicts = estimate_all(graph, direct, reported, agg);
  report.aggregate = evaluate_verdicts(run.verdicts, truth);

  auto scratch = run.verdicts;
  for (auto& v : scratch) {
    v.verdict = v.direct == TrustLabel::Trustworthy ? TrustVerdict::Trustworthy : TrustVerdict::Untrustworthy;
  }
  report.direct_only = evaluate_verdicts(scratch, truth);
  for (double theta : params.sweep_thetas) {
    const AggregationConfig c(theta);
    for (auto& v : scratch) v.verdict = estimate_trust(v.direct, v.recs, c);
    report.sweep.push_back({theta, evaluate_verdicts(scratch, truth)});
  }
  return run;
}

ExperimentRun run_experiment(const SimConfig& cfg, const AttackSpec& attack,
                             const PipelineParams& params) {
  return run_pipeline(generate_trace(cfg), cfg, attack, params);
}

std::string ExperimentReport::to_json() const {
  using nlohmann::ordered_json;
  auto metrics = [](const VerdictMetrics& m) {
    return ordered_json{{"accuracy", m.accuracy},
                        {"false_trust_rate", m.false_trust_rate},
                        {"false_distrust_rate", m.false_distrust_rate},
                        {"evaluated_pairs", m.evaluated}};
  };
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["config"] = {{"node_count", config.node_count},
                   {"malicious_fraction", config.malicious_fraction},
                   {"community_count", config.community_count},
                   {"interaction_count", config.interaction_count},
                   {"duration", config.duration},
                   {"rng_seed", config.rng_seed},
                   {"max_memberships", config.max_memberships},
                   {"friend_prob_shared", config.friend_prob_shared},
                   {"friend_prob_other", config.friend_prob_other},
                   {"friend_prob_mixed", config.friend_prob_mixed},
                   {"friend_prob_malicious", config.friend_prob_malicious},
                   {"friend_interaction_weight", config.friend_interaction_weight},
                   {"honest_success", config.honest_success},
                   {"malicious_success", config.malicious_success},
                   {"collusion_success", config.collusion_success},
                   {"max_messages", config.max_messages},
                   {"malicious_message_skew", config.malicious_message_skew}};
  doc["pipeline"] = {{"theta", params.theta},
                     {"k_min", params.k_min},
                     {"k_max", params.k_max},
                     {"kmeans_restarts", params.kmeans.restarts},
                     {"kmeans_max_iters", params.kmeans.max_iters},
                     {"trees", params.forest.tree_count},
                     {"max_depth", params.forest.max_depth},
                     {"features_per_split", params.forest.features_per_split},
                     {"train_fraction", params.train_fraction},
                     {"direct_source", params.direct_source == DirectSource::Forest ? "forest" : "kmeans"}};
  if (attack.kind != AttackKind::None) {
    doc["attack"] = {{"kind", attack_name(attack.kind)},
                     {"attacker_fraction", attack.attacker_fraction},
                     {"intensity", attack.intensity},
                     {"attackers", attackers}};
  }
  ordered_json imp = ordered_json::object();
  for (std::size_t f = 0; f < kFeatureCount; ++f) imp[std::string(kFeatureNames[f])] = importances[f];
  ordered_json sweep_json = ordered_json::array();
  for (const auto& s : sweep) {
    ordered_json entry{{"theta", s.theta}};
    entry.update(metrics(s.metrics));
    sweep_json.push_back(std::move(entry));
  }
  doc["results"] = {{"pair_count", pair_count},
                    {"cost_curve", cost_curve},
                    {"elbow_k", elbow_k},
                    {"cluster_k", 3},
                    {"label_counts",
                     {{"untrustworthy", label_counts[0]},
                      {"trustworthy", label_counts[1]},
                      {"neutral", label_counts[2]}}},
                    {"forest_held_out_accuracy", forest_held_out_accuracy},
                    {"forest_train_accuracy", forest_train_accuracy},
                    {"feature_importances", imp},
                    {"direct_only", metrics(direct_only)},
                    {"aggregate", metrics(aggregate)},
                    {"theta_sweep", sweep_json}};
  return doc.dump(2) + "\n";
}

}  // namespace siot
