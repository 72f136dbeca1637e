#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "siot/graph.hpp"
#include "siot/rng.hpp"

namespace siot::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("siot-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// Interaction shorthand: messages and success default to a plain good exchange.
inline InteractionRecord rec(std::int64_t t, NodeId s, NodeId d, std::int64_t messages = 1,
                             bool success = true) {
  return {t, s, d, messages, success};
}

/// Small graph builder for hand fixtures.
struct GraphSpec {
  std::size_t nodes = 0;
  std::vector<SocialGraph::FriendEdge> friends;
  std::vector<SocialGraph::Membership> memberships;
  std::vector<InteractionRecord> interactions;

  SocialGraph build() const { return SocialGraph::build(nodes, friends, memberships, interactions); }
};

/// Random graph with every node interacting with at least one other node.
inline SocialGraph random_graph(std::uint64_t seed, std::size_t max_nodes = 12) {
  Rng rng(seed);
  GraphSpec g;
  g.nodes = static_cast<std::size_t>(rng.between(2, static_cast<std::int64_t>(max_nodes)));
  const double friend_p = rng.uniform();
  for (NodeId i = 0; i < g.nodes; ++i) {
    for (NodeId j = i + 1; j < g.nodes; ++j) {
      if (rng.bernoulli(friend_p)) g.friends.push_back({i, j});
    }
  }
  const auto communities = static_cast<CommunityId>(rng.between(1, 5));
  for (NodeId i = 0; i < g.nodes; ++i) {
    for (CommunityId c = 0; c < communities; ++c) {
      if (rng.bernoulli(0.4)) g.memberships.push_back({i, c});
    }
  }
  const auto count = rng.between(1, 60);
  for (std::int64_t k = 0; k < count; ++k) {
    const auto s = static_cast<NodeId>(rng.index(g.nodes));
    auto d = static_cast<NodeId>(rng.index(g.nodes - 1));
    if (d >= s) ++d;
    g.interactions.push_back(rec(rng.between(0, 1000), s, d, rng.between(1, 20), rng.bernoulli(0.7)));
  }
  return g.build();
}

#ifdef SIOT_TRUST_BIN
struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

/// Runs the siot-trust binary with `args` (already shell-quoted).
inline CliResult run_cli(const std::string& args) {
  TempDir io;
  const std::string cmd = std::string("\"") + SIOT_TRUST_BIN + "\" " + args + " >\"" +
                          io.file("stdout") + "\" 2>\"" + io.file("stderr") + "\"";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = read_text(io.file("stdout"));
  r.err = read_text(io.file("stderr"));
  return r;
}
#endif

}  // namespace siot::testing
