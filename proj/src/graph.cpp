#include "siot/graph.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

#include "siot/csv.hpp"
#include "siot/error.hpp"

namespace siot {
namespace {

std::uint64_t unordered_key(NodeId i, NodeId j) {
  const NodeId lo = std::min(i, j);
  const NodeId hi = std::max(i, j);
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

void sort_unique(std::vector<NodeId>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

SocialGraph SocialGraph::build(std::size_t node_count, std::span<const FriendEdge> friends,
                               std::span<const Membership> memberships,
                               std::vector<InteractionRecord> interactions) {
  SocialGraph g;
  g.friends_.assign(node_count, {});
  g.communities_.assign(node_count, {});

  auto check_node = [&](NodeId id, const char* where) {
    if (id >= node_count) {
      throw IntegrityError(std::string("node ") + std::to_string(id) + " referenced in " + where +
                           " is not in the node table");
    }
  };

  for (const auto& e : friends) {
    check_node(e.a, "friends");
    check_node(e.b, "friends");
    if (e.a == e.b) {
      throw ValidationError("self-friendship on node " + std::to_string(e.a));
    }
    g.friends_[e.a].push_back(e.b);
    g.friends_[e.b].push_back(e.a);
  }
  for (auto& f : g.friends_) sort_unique(f);

  CommunityId max_community = 0;
  bool any_community = false;
  for (const auto& m : memberships) {
    check_node(m.node, "communities");
    g.communities_[m.node].push_back(m.community);
    max_community = std::max(max_community, m.community);
    any_community = true;
  }
  for (auto& c : g.communities_) sort_unique(c);

  for (const auto& r : interactions) {
    check_node(r.source, "interactions");
    check_node(r.target, "interactions");
    if (r.source == r.target) {
      throw ValidationError("interaction from node " + std::to_string(r.source) + " to itself");
    }
    if (r.messages <= 0) throw ValidationError("interaction with non-positive message count");
    if (r.timestamp < 0) throw ValidationError("interaction with negative timestamp");
  }
  std::stable_sort(interactions.begin(), interactions.end(),
                   [](const InteractionRecord& a, const InteractionRecord& b) {
                     return a.timestamp < b.timestamp;
                   });
  g.interactions_ = std::move(interactions);

  for (const auto& r : g.interactions_) {
    PairHistory& h = g.histories_[unordered_key(r.source, r.target)];
    if (r.source < r.target) {
      h.messages_low_to_high += r.messages;
    } else {
      h.messages_high_to_low += r.messages;
    }
    ++h.interactions;
    if (!r.success) ++h.failures;
  }

  g.external_ids_.resize(node_count);
  for (std::size_t i = 0; i < node_count; ++i) g.external_ids_[i] = static_cast<std::int64_t>(i);
  const std::size_t community_space = any_community ? max_community + 1 : 0;
  g.community_names_.resize(community_space);
  for (std::size_t c = 0; c < community_space; ++c) g.community_names_[c] = std::to_string(c);
  return g;
}

bool SocialGraph::are_friends(NodeId i, NodeId j) const {
  const auto& f = friends_.at(i);
  return std::binary_search(f.begin(), f.end(), j);
}

std::optional<PairHistory> SocialGraph::history(NodeId i, NodeId j) const {
  auto it = histories_.find(unordered_key(i, j));
  if (it == histories_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeId> SocialGraph::find_external(std::int64_t external) const {
  auto it = std::lower_bound(external_ids_.begin(), external_ids_.end(), external);
  if (it == external_ids_.end() || *it != external) return std::nullopt;
  return static_cast<NodeId>(it - external_ids_.begin());
}

void SocialGraph::set_external_names(std::vector<std::int64_t> node_ids,
                                     std::vector<std::string> community_names) {
  if (node_ids.size() != node_count()) throw ContractError("external id table size mismatch");
  if (!std::is_sorted(node_ids.begin(), node_ids.end()) ||
      std::adjacent_find(node_ids.begin(), node_ids.end()) != node_ids.end()) {
    throw ContractError("external ids must be strictly ascending");
  }
  if (community_names.size() < community_names_.size()) {
    throw ContractError("community name table too small");
  }
  external_ids_ = std::move(node_ids);
  community_names_ = std::move(community_names);
}

TracePaths TracePaths::in_directory(const std::string& dir) {
  const std::filesystem::path base(dir);
  return {(base / "nodes.csv").string(), (base / "friends.csv").string(),
          (base / "communities.csv").string(), (base / "interactions.csv").string()};
}

SocialGraph ingest_trace(const TracePaths& paths) {
  for (const std::string* p : {&paths.nodes, &paths.friends, &paths.communities, &paths.interactions}) {
    if (!std::filesystem::exists(*p)) throw IoError("missing trace file " + *p);
  }

  const auto node_rows = csv::read(paths.nodes, "node_id");
  std::vector<std::int64_t> ids;
  ids.reserve(node_rows.size());
  for (const auto& row : node_rows) {
    const std::int64_t id = csv::to_int(row, 0, paths.nodes);
    if (id < 0) throw ParseError(paths.nodes, row.line, "node ids must be non-negative");
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end()) {
    throw ValidationError("duplicate node id " + std::to_string(*dup) + " in " + paths.nodes);
  }
  auto dense = [&](std::int64_t external, const std::string& file, std::size_t line) -> NodeId {
    auto it = std::lower_bound(ids.begin(), ids.end(), external);
    if (it == ids.end() || *it != external) {
      throw IntegrityError(file + ":" + std::to_string(line) + ": unknown node id " +
                           std::to_string(external));
    }
    return static_cast<NodeId>(it - ids.begin());
  };

  std::vector<SocialGraph::FriendEdge> edges;
  for (const auto& row : csv::read(paths.friends, "node_id,friend_id")) {
    const auto a = dense(csv::to_int(row, 0, paths.friends), paths.friends, row.line);
    const auto b = dense(csv::to_int(row, 1, paths.friends), paths.friends, row.line);
    if (a == b) {
      throw ValidationError(paths.friends + ":" + std::to_string(row.line) + ": self-friendship");
    }
    edges.push_back({a, b});
  }

  const auto community_rows = csv::read(paths.communities, "node_id,community_id");
  std::vector<std::string> names;
  for (const auto& row : community_rows) names.push_back(row.fields[1]);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  std::vector<SocialGraph::Membership> memberships;
  for (const auto& row : community_rows) {
    if (row.fields[1].empty()) throw ParseError(paths.communities, row.line, "empty community id");
    const auto node = dense(csv::to_int(row, 0, paths.communities), paths.communities, row.line);
    const auto c = std::lower_bound(names.begin(), names.end(), row.fields[1]) - names.begin();
    memberships.push_back({node, static_cast<CommunityId>(c)});
  }

  std::vector<InteractionRecord> records;
  for (const auto& row : csv::read(paths.interactions, "timestamp,source,target,messages,success")) {
    const std::string& f = paths.interactions;
    InteractionRecord r;
    r.timestamp = csv::to_int(row, 0, f);
    if (r.timestamp < 0) throw ParseError(f, row.line, "negative timestamp");
    r.source = dense(csv::to_int(row, 1, f), f, row.line);
    r.target = dense(csv::to_int(row, 2, f), f, row.line);
    r.messages = csv::to_int(row, 3, f);
    if (r.messages <= 0) throw ParseError(f, row.line, "messages must be positive");
    const auto success = csv::to_int(row, 4, f);
    if (success != 0 && success != 1) throw ParseError(f, row.line, "success must be 0 or 1");
    r.success = success == 1;
    if (r.source == r.target) {
      throw ValidationError(f + ":" + std::to_string(row.line) + ": interaction with itself");
    }
    records.push_back(r);
  }

  SocialGraph g = SocialGraph::build(ids.size(), edges, memberships, std::move(records));
  g.set_external_names(std::move(ids), std::move(names));
  return g;
}

void write_trace(const SocialGraph& graph, const TracePaths& paths) {
  std::ostringstream nodes, friends, communities, interactions;
  nodes << "node_id\n";
  friends << "node_id,friend_id\n";
  communities << "node_id,community_id\n";
  interactions << "timestamp,source,target,messages,success\n";
  for (NodeId i = 0; i < graph.node_count(); ++i) {
    const auto ext = graph.external_id(i);
    nodes << ext << '\n';
    for (NodeId f : graph.friends(i)) {
      if (f > i) friends << ext << ',' << graph.external_id(f) << '\n';
    }
    for (CommunityId c : graph.communities(i)) {
      communities << ext << ',' << graph.community_name(c) << '\n';
    }
  }
  for (const auto& r : graph.interactions()) {
    interactions << r.timestamp << ',' << graph.external_id(r.source) << ','
                 << graph.external_id(r.target) << ',' << r.messages << ','
                 << (r.success ? 1 : 0) << '\n';
  }
  csv::write_file(paths.nodes, nodes.str());
  csv::write_file(paths.friends, friends.str());
  csv::write_file(paths.communities, communities.str());
  csv::write_file(paths.interactions, interactions.str());
}

std::vector<PairKey> interacting_pairs(const SocialGraph& graph) {
  std::vector<PairKey> pairs;
  pairs.reserve(graph.interactions().size() * 2);
  for (const auto& r : graph.interactions()) {
    pairs.push_back({r.source, r.target});
    pairs.push_back({r.target, r.source});
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  return pairs;
}

std::vector<NodeId> common_friends(const SocialGraph& graph, NodeId i, NodeId j) {
  const auto& fi = graph.friends(i);
  const auto& fj = graph.friends(j);
  std::vector<NodeId> out;
  std::set_intersection(fi.begin(), fi.end(), fj.begin(), fj.end(), std::back_inserter(out));
  std::erase_if(out, [&](NodeId r) { return r == i || r == j; });
  return out;
}

}  // namespace siot
