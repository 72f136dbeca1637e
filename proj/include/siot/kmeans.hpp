#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "siot/execution.hpp"
#include "siot/features.hpp"

namespace siot {

using Point = std::array<double, kFeatureCount>;

/// Three-valued direct-trust class.
enum class TrustLabel : std::uint8_t { Untrustworthy = 0, Trustworthy = 1, Neutral = 2 };

inline constexpr std::size_t kLabelCount = 3;

inline int to_int(TrustLabel l) { return static_cast<int>(l); }
/// Throws ValidationError outside {0,1,2}.
TrustLabel label_from_int(std::int64_t v);

struct ClusteringResult {
  std::size_t k = 0;
  std::vector<Point> centroids;
  std::vector<std::size_t> assignments;
  double cost = 0.0;
  /// Cost after each assignment step, in order. Non-increasing.
  std::vector<double> cost_history;
  std::size_t iterations = 0;
};

struct KMeansOptions {
  std::size_t max_iters = 300;
  std::size_t restarts = 5;
  Execution exec = Execution::Parallel;
};

double squared_distance(const Point& a, const Point& b);

/// Nearest-centroid assignment (lowest index wins ties) for every sample,
/// writing the squared distance alongside. This is the data-parallel kernel
/// of Lloyd's iteration.
void assign_nearest(std::span<const Point> samples, std::span<const Point> centroids,
                    std::span<std::size_t> assignment, std::span<double> distance,
                    Execution exec);

/// One Lloyd run from k distinct samples picked uniformly with `rng_seed`,
/// until assignments are unchanged or max_iters. Then single samples are
/// moved between clusters while a move lowers the cost (centroid shift
/// included), so no one-sample reassignment can improve the result.
/// Throws InfeasibleError when k exceeds the number of distinct samples,
/// ContractError for k = 0, empty input, or samples outside [0,1]^4.
ClusteringResult kmeans(std::span<const Point> samples, std::size_t k, std::uint64_t rng_seed,
                        std::size_t max_iters = 300, Execution exec = Execution::Parallel);

/// Best (lowest cost) of `opts.restarts` seeded runs. Restart r uses
/// sub-seed mix_seed(rng_seed, r).
ClusteringResult kmeans_best_of(std::span<const Point> samples, std::size_t k,
                                std::uint64_t rng_seed, const KMeansOptions& opts = {});

/// Cost curve over k_min..k_max, each entry best of `opts.restarts`.
std::vector<double> cost_curve(std::span<const Point> samples, std::size_t k_min,
                               std::size_t k_max, std::uint64_t rng_seed,
                               const KMeansOptions& opts = {});

/// Elbow choice: the interior k maximizing cost(k-1) - 2 cost(k) + cost(k+1),
/// ties toward smaller k. With fewer than three k values there is no
/// interior point and k_min is returned.
std::size_t elbow_select_k(std::span<const Point> samples, std::size_t k_min, std::size_t k_max,
                           std::uint64_t rng_seed, const KMeansOptions& opts = {});

/// Knee of an already computed curve; curve[0] belongs to k_min.
std::size_t elbow_from_curve(std::span<const double> curve, std::size_t k_min);

/// Maps a 3-cluster result to trust labels: smallest centroid norm is
/// untrustworthy, largest is trustworthy, the middle one neutral. Equal
/// norms are ordered by cluster index. Throws ContractError unless k = 3.
std::vector<TrustLabel> label_clusters(const ClusteringResult& result);

/// The per-cluster label used by label_clusters().
std::array<TrustLabel, 3> cluster_label_map(const ClusteringResult& result);

std::size_t distinct_count(std::span<const Point> samples);

}  // namespace siot
