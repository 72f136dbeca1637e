#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace siot {

using NodeId = std::uint32_t;
using CommunityId = std::uint32_t;

/// Ordered (trustor, trustee) pair. Trust is directional: (i,j) and (j,i)
/// are different keys.
struct PairKey {
  NodeId trustor = 0;
  NodeId trustee = 0;

  friend auto operator<=>(const PairKey&, const PairKey&) = default;

  std::uint64_t packed() const {
    return (static_cast<std::uint64_t>(trustor) << 32) | trustee;
  }
  PairKey reversed() const { return {trustee, trustor}; }
};

struct PairKeyHash {
  std::size_t operator()(const PairKey& k) const noexcept {
    return std::hash<std::uint64_t>{}(k.packed());
  }
};

/// One directed message exchange or transaction attempt.
struct InteractionRecord {
  std::int64_t timestamp = 0;
  NodeId source = 0;
  NodeId target = 0;
  std::int64_t messages = 1;
  bool success = true;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

/// Per unordered pair totals over the whole interaction log. `low` is the
/// smaller node id of the pair.
struct PairHistory {
  std::int64_t messages_low_to_high = 0;
  std::int64_t messages_high_to_low = 0;
  std::int64_t interactions = 0;
  std::int64_t failures = 0;
};

/// Immutable social network: symmetric friendships, community memberships,
/// and a timestamp-ordered interaction log. Every instance satisfies the
/// graph invariants (checked in build()).
class SocialGraph {
public:
  struct FriendEdge {
    NodeId a = 0;
    NodeId b = 0;
  };
  struct Membership {
    NodeId node = 0;
    CommunityId community = 0;
  };

  /// Validates and normalizes raw parts into a graph. Friend edges are
  /// symmetrized, interactions are stably sorted by timestamp.
  /// Throws IntegrityError for out-of-range ids, ValidationError for
  /// self-loops or non-positive message counts.
  static SocialGraph build(std::size_t node_count, std::span<const FriendEdge> friends,
                           std::span<const Membership> memberships,
                           std::vector<InteractionRecord> interactions);

  SocialGraph() = default;

  std::size_t node_count() const { return friends_.size(); }

  /// Sorted ascending, never contains the node itself.
  const std::vector<NodeId>& friends(NodeId i) const { return friends_.at(i); }
  /// Sorted ascending.
  const std::vector<CommunityId>& communities(NodeId i) const { return communities_.at(i); }
  const std::vector<InteractionRecord>& interactions() const { return interactions_; }

  bool are_friends(NodeId i, NodeId j) const;

  /// Totals for the unordered pair {i,j}; nullopt when they never interacted.
  std::optional<PairHistory> history(NodeId i, NodeId j) const;

  /// Source-file identifiers. Defaults to the dense ids themselves.
  std::int64_t external_id(NodeId i) const { return external_ids_.at(i); }
  std::optional<NodeId> find_external(std::int64_t external) const;
  const std::string& community_name(CommunityId c) const { return community_names_.at(c); }
  std::size_t community_count() const { return community_names_.size(); }

  /// Replaces the external naming (ids and community names). Sizes must
  /// match node_count() and the community id space.
  void set_external_names(std::vector<std::int64_t> node_ids,
                          std::vector<std::string> community_names);

  friend bool operator==(const SocialGraph& a, const SocialGraph& b) {
    return a.friends_ == b.friends_ && a.communities_ == b.communities_ &&
           a.interactions_ == b.interactions_ && a.external_ids_ == b.external_ids_ &&
           a.community_names_ == b.community_names_;
  }

private:
  std::vector<std::vector<NodeId>> friends_;
  std::vector<std::vector<CommunityId>> communities_;
  std::vector<InteractionRecord> interactions_;
  std::unordered_map<std::uint64_t, PairHistory> histories_;
  std::vector<std::int64_t> external_ids_;
  std::vector<std::string> community_names_;
};

/// Paths of the four trace files inside a directory.
struct TracePaths {
  std::string nodes;
  std::string friends;
  std::string communities;
  std::string interactions;

  static TracePaths in_directory(const std::string& dir);
};

/// Loads a trace from the four CSV files. Sparse node ids are remapped to
/// dense 0..N-1 in ascending order of the source id; the source ids stay
/// available through external_id().
SocialGraph ingest_trace(const TracePaths& paths);

/// Writes the four CSV files using external ids. Output is canonical:
/// nodes ascending, friend rows as (low, high) pairs, memberships sorted,
/// interactions in stored order.
void write_trace(const SocialGraph& graph, const TracePaths& paths);

/// Every ordered pair with at least one interaction in either direction,
/// ascending by (trustor, trustee).
std::vector<PairKey> interacting_pairs(const SocialGraph& graph);

/// friends(i) ∩ friends(j) without i and j.
std::vector<NodeId> common_friends(const SocialGraph& graph, NodeId i, NodeId j);

}  // namespace siot
