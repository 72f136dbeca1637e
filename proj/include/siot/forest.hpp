#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "siot/execution.hpp"
#include "siot/kmeans.hpp"

namespace siot {

/// Flat binary tree node. Internal nodes send x[feature] <= threshold left.
struct TreeNode {
  std::int32_t feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;
  std::array<std::uint32_t, kLabelCount> votes{};  // class counts reaching the node
  TrustLabel label = TrustLabel::Untrustworthy;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  TrustLabel predict(const Point& x) const;
  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct ForestParams {
  std::size_t tree_count = 100;
  std::size_t max_depth = 8;
  std::size_t features_per_split = 2;
  std::size_t min_samples_split = 2;

  friend bool operator==(const ForestParams&, const ForestParams&) = default;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t rng_seed = 0;
};

struct ForestModel {
  std::vector<DecisionTree> trees;
  std::array<double, kFeatureCount> feature_importances{};
  ForestParams params;
  std::uint64_t rng_seed = 0;

  std::size_t tree_count() const { return trees.size(); }
  friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

struct TrainResult {
  ForestModel model;
  double held_out_accuracy = 0.0;
  double train_accuracy = 0.0;
  std::size_t train_size = 0;
  std::size_t test_size = 0;
};

/// Picks the winning class from vote counts. Ties resolve toward
/// untrustworthy first, then neutral, then trustworthy.
TrustLabel majority_label(const std::array<std::uint32_t, kLabelCount>& votes);

/// Trains one CART tree (Gini, `features_per_split` random candidate
/// features per node) on the rows listed in `rows` (duplicates allowed).
/// Adds each split's weighted impurity decrease to `importance`.
DecisionTree grow_tree(std::span<const Point> features, std::span<const TrustLabel> labels,
                       std::span<const std::size_t> rows, const ForestParams& params,
                       std::uint64_t seed, std::array<double, kFeatureCount>& importance);

/// Bagged forest on an explicit training set. Tree t draws its bootstrap
/// and feature choices from mix_seed(seed, t), so serial and parallel
/// training give the same model.
ForestModel fit_forest(std::span<const Point> features, std::span<const TrustLabel> labels,
                       const ForestParams& params, std::uint64_t seed,
                       Execution exec = Execution::Parallel);

/// Seeded shuffle, train/test split, fit, and held-out evaluation.
/// Throws InsufficientDataError below 10 samples, ContractError on size
/// mismatch or train_fraction outside (0,1).
TrainResult train_forest(std::span<const Point> features, std::span<const TrustLabel> labels,
                         const SplitSpec& split, const ForestParams& params = {},
                         Execution exec = Execution::Parallel);

/// Majority vote over trees, ties as in majority_label().
TrustLabel predict(const ForestModel& model, const Point& x);
TrustLabel predict(const ForestModel& model, const TrustFeatureVector& v);

std::vector<TrustLabel> predict_all(const ForestModel& model, std::span<const Point> xs,
                                    Execution exec = Execution::Parallel);

double accuracy(const ForestModel& model, std::span<const Point> xs,
                std::span<const TrustLabel> ys);

/// Normalized mean decrease in impurity, ordered (FS, CoI, CoP, Reward).
std::array<double, kFeatureCount> feature_importances(const ForestModel& model);

struct GridCell {
  double x = 0.0;
  double y = 0.0;
  TrustLabel label = TrustLabel::Untrustworthy;
};

/// Predictions over a resolution x resolution lattice of cell centers in
/// [0,1]^2 for the two chosen features; the other features take their value
/// from `fixed`. Row-major with x varying fastest.
std::vector<GridCell> decision_boundary_grid(const ForestModel& model, Feature x_feature,
                                             Feature y_feature, const Point& fixed,
                                             std::size_t resolution);

/// Versioned JSON. Doubles are stored as shortest round-trip decimal
/// strings, so to_json(from_json(s)) == s.
std::string model_to_json(const ForestModel& model);
ForestModel model_from_json(const std::string& text);

}  // namespace siot
