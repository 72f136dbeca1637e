#include "siot/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "siot/error.hpp"
#include "siot/rng.hpp"

namespace siot {

TrustLabel label_from_int(std::int64_t v) {
  if (v < 0 || v > 2) throw ValidationError("trust label must be 0, 1 or 2, got " + std::to_string(v));
  return static_cast<TrustLabel>(v);
}

double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t d = 0; d < kFeatureCount; ++d) {
    const double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

std::size_t distinct_count(std::span<const Point> samples) {
  std::vector<Point> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

namespace {

// Minimum cost drop for a single-sample move; keeps rounding noise from
// cycling samples between clusters.
constexpr double kMoveTolerance = 1e-9;

inline void assign_one(const Point& x, std::span<const Point> centroids, std::size_t& which,
                       double& dist) {
  std::size_t best = 0;
  double best_d = squared_distance(x, centroids[0]);
  for (std::size_t c = 1; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  which = best;
  dist = best_d;
}

void check_samples(std::span<const Point> samples, std::size_t k) {
  if (k == 0) throw ContractError("k-means needs k >= 1");
  if (samples.empty()) throw ContractError("k-means needs at least one sample");
  for (const auto& p : samples) {
    for (double v : p) {
      if (!(v >= 0.0 && v <= 1.0)) throw ContractError("k-means samples must lie in [0,1]^4");
    }
  }
}

}  // namespace

void assign_nearest(std::span<const Point> samples, std::span<const Point> centroids,
                    std::span<std::size_t> assignment, std::span<double> distance,
                    Execution exec) {
  const auto n = static_cast<std::ptrdiff_t>(samples.size());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) assign_one(samples[i], centroids, assignment[i], distance[i]);
    return;
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) assign_one(samples[i], centroids, assignment[i], distance[i]);
}

ClusteringResult kmeans(std::span<const Point> samples, std::size_t k, std::uint64_t rng_seed,
                        std::size_t max_iters, Execution exec) {
  check_samples(samples, k);
  if (k > distinct_count(samples)) {
    throw InfeasibleError("k = " + std::to_string(k) + " exceeds the number of distinct samples");
  }
  if (max_iters == 0) max_iters = 1;
  const std::size_t n = samples.size();

  ClusteringResult res;
  res.k = k;

  // Initial centroids: k distinct samples in seeded random order.
  Rng rng(rng_seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  for (std::size_t idx : order) {
    const Point& p = samples[idx];
    if (std::find(res.centroids.begin(), res.centroids.end(), p) == res.centroids.end()) {
      res.centroids.push_back(p);
      if (res.centroids.size() == k) break;
    }
  }

  std::vector<std::size_t> assignment(n, 0);
  std::vector<std::size_t> previous(n, k);
  std::vector<double> dist(n, 0.0);
  for (std::size_t it = 0; it < max_iters; ++it) {
    assign_nearest(samples, res.centroids, assignment, dist, exec);
    double cost = 0.0;
    for (double d : dist) cost += d;
    res.cost_history.push_back(cost);
    res.iterations = it + 1;
    if (assignment == previous || it + 1 == max_iters) break;
    previous = assignment;

    std::vector<Point> sums(k, Point{});
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto& s = sums[assignment[i]];
      for (std::size_t d = 0; d < kFeatureCount; ++d) s[d] += samples[i][d];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its centroid
      for (std::size_t d = 0; d < kFeatureCount; ++d) {
        res.centroids[c][d] = sums[c][d] / static_cast<double>(counts[c]);
      }
    }
  }
  // Lloyd's fixed points can still improve by moving one sample between
  // clusters once the centroid shift is accounted for. Polish with single
  // moves until none helps; each accepted move strictly lowers the cost.
  std::vector<Point> sums(k, Point{});
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < kFeatureCount; ++d) sums[assignment[i]][d] += samples[i][d];
    ++counts[assignment[i]];
  }
  auto mean_of = [&](std::size_t c) {
    Point m{};
    for (std::size_t d = 0; d < kFeatureCount; ++d) m[d] = sums[c][d] / static_cast<double>(counts[c]);
    return m;
  };
  for (std::size_t pass = 0; pass < max_iters; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t from = assignment[i];
      if (counts[from] < 2) continue;
      const double nf = static_cast<double>(counts[from]);
      const double leave = nf / (nf - 1.0) * squared_distance(samples[i], mean_of(from));
      std::size_t to = from;
      double best_gain = kMoveTolerance;
      for (std::size_t c = 0; c < k; ++c) {
        if (c == from || counts[c] == 0) continue;
        const double nc = static_cast<double>(counts[c]);
        const double gain = leave - nc / (nc + 1.0) * squared_distance(samples[i], mean_of(c));
        if (gain > best_gain) {
          best_gain = gain;
          to = c;
        }
      }
      if (to == from) continue;
      for (std::size_t d = 0; d < kFeatureCount; ++d) {
        sums[from][d] -= samples[i][d];
        sums[to][d] += samples[i][d];
      }
      --counts[from];
      ++counts[to];
      assignment[i] = to;
      moved = true;
    }
    if (!moved) break;
    // Fresh sums keep rounding drift out of the reported cost.
    sums.assign(k, Point{});
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < kFeatureCount; ++d) sums[assignment[i]][d] += samples[i][d];
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += squared_distance(samples[i], mean_of(assignment[i]));
    res.cost_history.push_back(cost);
    ++res.iterations;
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) res.centroids[c] = mean_of(c);
  }

  res.assignments = std::move(assignment);
  res.cost = res.cost_history.back();
  return res;
}

ClusteringResult kmeans_best_of(std::span<const Point> samples, std::size_t k,
                                std::uint64_t rng_seed, const KMeansOptions& opts) {
  const std::size_t restarts = std::max<std::size_t>(1, opts.restarts);
  ClusteringResult best;
  for (std::size_t r = 0; r < restarts; ++r) {
    ClusteringResult run = kmeans(samples, k, mix_seed(rng_seed, r), opts.max_iters, opts.exec);
    if (r == 0 || run.cost < best.cost) best = std::move(run);
  }
  return best;
}

std::vector<double> cost_curve(std::span<const Point> samples, std::size_t k_min,
                               std::size_t k_max, std::uint64_t rng_seed,
                               const KMeansOptions& opts) {
  if (k_min == 0 || k_max < k_min) throw ContractError("invalid k range");
  std::vector<double> curve;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    curve.push_back(kmeans_best_of(samples, k, mix_seed(rng_seed, 1000 + k), opts).cost);
  }
  return curve;
}

std::size_t elbow_from_curve(std::span<const double> curve, std::size_t k_min) {
  if (curve.size() < 3) return k_min;
  std::size_t best = 1;
  double best_d = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double d = curve[i - 1] - 2.0 * curve[i] + curve[i + 1];
    if (d > best_d) {
      best_d = d;
      best = i;
    }
  }
  return k_min + best;
}

std::size_t elbow_select_k(std::span<const Point> samples, std::size_t k_min, std::size_t k_max,
                           std::uint64_t rng_seed, const KMeansOptions& opts) {
  const auto curve = cost_curve(samples, k_min, k_max, rng_seed, opts);
  return elbow_from_curve(curve, k_min);
}

std::array<TrustLabel, 3> cluster_label_map(const ClusteringResult& result) {
  if (result.k != 3 || result.centroids.size() != 3) {
    throw ContractError("cluster labeling needs exactly 3 clusters, got " + std::to_string(result.k));
  }
  std::array<double, 3> norm{};
  for (std::size_t c = 0; c < 3; ++c) norm[c] = std::sqrt(squared_distance(result.centroids[c], Point{}));
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norm[a] < norm[b]; });
  std::array<TrustLabel, 3> map{};
  map[order[0]] = TrustLabel::Untrustworthy;
  map[order[1]] = TrustLabel::Neutral;
  map[order[2]] = TrustLabel::Trustworthy;
  return map;
}

std::vector<TrustLabel> label_clusters(const ClusteringResult& result) {
  const auto map = cluster_label_map(result);
  std::vector<TrustLabel> labels;
  labels.reserve(result.assignments.size());
  for (std::size_t a : result.assignments) labels.push_back(map.at(a));
  return labels;
}

}  // namespace siot
