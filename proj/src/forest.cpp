#include "siot/forest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "siot/csv.hpp"
#include "siot/error.hpp"
#include "siot/rng.hpp"

namespace siot {
namespace {

using Votes = std::array<std::uint32_t, kLabelCount>;

double gini_weighted(const Votes& v) {
  // n * gini = n - sum(c^2) / n
  const double n = static_cast<double>(v[0]) + v[1] + v[2];
  if (n == 0.0) return 0.0;
  double sq = 0.0;
  for (auto c : v) sq += static_cast<double>(c) * c;
  return n - sq / n;
}

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double child_impurity = 0.0;
};

class TreeBuilder {
public:
  TreeBuilder(std::span<const Point> x, std::span<const TrustLabel> y, const ForestParams& p,
              std::uint64_t seed, std::array<double, kFeatureCount>& importance)
      : x_(x), y_(y), params_(p), rng_(seed), importance_(importance) {}

  DecisionTree build(std::vector<std::size_t> rows) {
    DecisionTree tree;
    grow(tree, std::move(rows), 0);
    return tree;
  }

private:
  std::int32_t grow(DecisionTree& tree, std::vector<std::size_t> rows, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    Votes votes{};
    for (std::size_t r : rows) ++votes[static_cast<std::size_t>(y_[r])];
    tree.nodes[id].votes = votes;
    tree.nodes[id].label = majority_label(votes);

    const bool pure = std::count(votes.begin(), votes.end(), 0u) >= 2;
    if (pure || depth >= params_.max_depth || rows.size() < params_.min_samples_split) return id;

    const SplitChoice split = best_split(rows, votes);
    const double decrease = gini_weighted(votes) - split.child_impurity;
    if (!split.found || decrease <= 1e-12) return id;

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (x_[r][split.feature] <= split.threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    importance_[split.feature] += decrease;

    tree.nodes[id].feature = static_cast<std::int32_t>(split.feature);
    tree.nodes[id].threshold = split.threshold;
    const auto l = grow(tree, std::move(left), depth + 1);
    const auto r = grow(tree, std::move(right), depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, const Votes& total) {
    std::array<std::size_t, kFeatureCount> features{0, 1, 2, 3};
    const std::size_t m = std::clamp<std::size_t>(params_.features_per_split, 1, kFeatureCount);
    for (std::size_t i = 0; i < m; ++i) std::swap(features[i], features[i + rng_.index(kFeatureCount - i)]);

    SplitChoice best;
    std::vector<std::pair<double, std::uint8_t>> column(rows.size());
    for (std::size_t c = 0; c < m; ++c) {
      const std::size_t f = features[c];
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {x_[rows[i]][f], static_cast<std::uint8_t>(y_[rows[i]])};
      }
      std::sort(column.begin(), column.end());
      Votes left{};
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        ++left[column[i].second];
        if (!(column[i].first < column[i + 1].first)) continue;
        Votes right{};
        for (std::size_t k = 0; k < kLabelCount; ++k) right[k] = total[k] - left[k];
        const double impurity = gini_weighted(left) + gini_weighted(right);
        if (!best.found || impurity < best.child_impurity) {
          double t = 0.5 * (column[i].first + column[i + 1].first);
          if (!(t < column[i + 1].first)) t = column[i].first;
          best = {true, f, t, impurity};
        }
      }
    }
    return best;
  }

  std::span<const Point> x_;
  std::span<const TrustLabel> y_;
  const ForestParams& params_;
  Rng rng_;
  std::array<double, kFeatureCount>& importance_;
};

}  // namespace

TrustLabel majority_label(const Votes& votes) {
  // Tie priority: untrustworthy, neutral, trustworthy.
  constexpr std::array<TrustLabel, 3> priority{TrustLabel::Untrustworthy, TrustLabel::Neutral,
                                               TrustLabel::Trustworthy};
  TrustLabel best = priority[0];
  for (TrustLabel l : priority) {
    if (votes[static_cast<std::size_t>(l)] > votes[static_cast<std::size_t>(best)]) best = l;
  }
  return best;
}

TrustLabel DecisionTree::predict(const Point& x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[i].label;
}

DecisionTree grow_tree(std::span<const Point> features, std::span<const TrustLabel> labels,
                       std::span<const std::size_t> rows, const ForestParams& params,
                       std::uint64_t seed, std::array<double, kFeatureCount>& importance) {
  TreeBuilder builder(features, labels, params, seed, importance);
  return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

ForestModel fit_forest(std::span<const Point> features, std::span<const TrustLabel> labels,
                       const ForestParams& params, std::uint64_t seed, Execution exec) {
  if (features.size() != labels.size()) throw ContractError("features and labels differ in length");
  if (features.empty()) throw InsufficientDataError("cannot fit a forest on no samples");
  if (params.tree_count == 0) throw ConfigError("tree_count must be positive");

  ForestModel model;
  model.params = params;
  model.rng_seed = seed;
  model.trees.resize(params.tree_count);
  std::vector<std::array<double, kFeatureCount>> per_tree(params.tree_count, {0.0, 0.0, 0.0, 0.0});

  const std::size_t n = features.size();
  auto fit_one = [&](std::size_t t) {
    const std::uint64_t tree_seed = mix_seed(seed, t);
    Rng rng(tree_seed);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = rng.index(n);
    model.trees[t] = grow_tree(features, labels, rows, params, mix_seed(tree_seed, 1), per_tree[t]);
  };
  const auto count = static_cast<std::ptrdiff_t>(params.tree_count);
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t t = 0; t < count; ++t) fit_one(static_cast<std::size_t>(t));
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < count; ++t) fit_one(static_cast<std::size_t>(t));
  }

  std::array<double, kFeatureCount> mean{};
  std::size_t contributing = 0;
  for (const auto& imp : per_tree) {
    const double s = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (s <= 0.0) continue;
    for (std::size_t f = 0; f < kFeatureCount; ++f) mean[f] += imp[f] / s;
    ++contributing;
  }
  if (contributing == 0) {
    mean.fill(1.0 / kFeatureCount);  // no split anywhere: nothing to attribute
  } else {
    const double s = std::accumulate(mean.begin(), mean.end(), 0.0);
    for (auto& v : mean) v /= s;
  }
  model.feature_importances = mean;
  return model;
}

TrainResult train_forest(std::span<const Point> features, std::span<const TrustLabel> labels,
                         const SplitSpec& split, const ForestParams& params, Execution exec) {
  if (features.size() != labels.size()) throw ContractError("features and labels differ in length");
  if (features.size() < 10) {
    throw InsufficientDataError("need at least 10 samples to train, got " +
                                std::to_string(features.size()));
  }
  if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0)) {
    throw ContractError("train_fraction must be in (0,1)");
  }
  const std::size_t n = features.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(split.rng_seed);
  rng.shuffle(order);
  const auto wanted = static_cast<std::size_t>(std::llround(split.train_fraction * static_cast<double>(n)));
  const std::size_t n_train = std::clamp<std::size_t>(wanted, 1, n - 1);

  std::vector<Point> xtr, xte;
  std::vector<TrustLabel> ytr, yte;
  for (std::size_t i = 0; i < n; ++i) {
    auto& xs = i < n_train ? xtr : xte;
    auto& ys = i < n_train ? ytr : yte;
    xs.push_back(features[order[i]]);
    ys.push_back(labels[order[i]]);
  }
  if (std::all_of(ytr.begin(), ytr.end(), [&](TrustLabel l) { return l == ytr.front(); })) {
    spdlog::warn("training set holds a single class ({}); the forest will predict it everywhere",
                 to_int(ytr.front()));
  }

  TrainResult res;
  res.model = fit_forest(xtr, ytr, params, mix_seed(split.rng_seed, 7), exec);
  res.train_size = xtr.size();
  res.test_size = xte.size();
  res.train_accuracy = accuracy(res.model, xtr, ytr);
  res.held_out_accuracy = accuracy(res.model, xte, yte);
  return res;
}

TrustLabel predict(const ForestModel& model, const Point& x) {
  Votes votes{};
  for (const auto& t : model.trees) ++votes[static_cast<std::size_t>(t.predict(x))];
  return majority_label(votes);
}

TrustLabel predict(const ForestModel& model, const TrustFeatureVector& v) {
  return predict(model, v.as_array());
}

std::vector<TrustLabel> predict_all(const ForestModel& model, std::span<const Point> xs,
                                    Execution exec) {
  std::vector<TrustLabel> out(xs.size());
  const auto n = static_cast<std::ptrdiff_t>(xs.size());
  if (exec == Execution::Serial) {
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict(model, xs[i]);
  } else {
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict(model, xs[i]);
  }
  return out;
}

double accuracy(const ForestModel& model, std::span<const Point> xs, std::span<const TrustLabel> ys) {
  if (xs.empty()) return 0.0;
  const auto pred = predict_all(model, xs);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) hit += pred[i] == ys[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(xs.size());
}

std::array<double, kFeatureCount> feature_importances(const ForestModel& model) {
  return model.feature_importances;
}

std::vector<GridCell> decision_boundary_grid(const ForestModel& model, Feature x_feature,
                                             Feature y_feature, const Point& fixed,
                                             std::size_t resolution) {
  if (x_feature == y_feature) throw ContractError("decision grid needs two different features");
  if (resolution == 0) throw ContractError("grid resolution must be positive");
  std::vector<GridCell> grid;
  grid.reserve(resolution * resolution);
  const double r = static_cast<double>(resolution);
  for (std::size_t yi = 0; yi < resolution; ++yi) {
    for (std::size_t xi = 0; xi < resolution; ++xi) {
      Point p = fixed;
      const double x = (static_cast<double>(xi) + 0.5) / r;
      const double y = (static_cast<double>(yi) + 0.5) / r;
      p[static_cast<std::size_t>(x_feature)] = x;
      p[static_cast<std::size_t>(y_feature)] = y;
      grid.push_back({x, y, predict(model, p)});
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

constexpr const char* kModelFormat = "siot-trust-forest";
constexpr int kModelVersion = 1;

double parse_decimal(const nlohmann::json& j, const char* what) {
  if (!j.is_string()) throw ValidationError(std::string("model: ") + what + " must be a decimal string");
  const auto& s = j.get_ref<const std::string&>();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw ValidationError(std::string("model: bad ") + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

std::string model_to_json(const ForestModel& model) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& t : model.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", csv::exact(n.threshold)},
                       {"left", n.left},
                       {"right", n.right},
                       {"votes", n.votes},
                       {"label", to_int(n.label)}});
    }
    trees.push_back(std::move(nodes));
  }
  json importances = json::array();
  for (double v : model.feature_importances) importances.push_back(csv::exact(v));
  json doc = {{"format", kModelFormat},
              {"version", kModelVersion},
              {"rng_seed", model.rng_seed},
              {"hyperparameters",
               {{"tree_count", model.params.tree_count},
                {"max_depth", model.params.max_depth},
                {"features_per_split", model.params.features_per_split},
                {"min_samples_split", model.params.min_samples_split}}},
              {"feature_order", kFeatureNames},
              {"feature_importances", importances},
              {"trees", trees}};
  return doc.dump(1) + "\n";
}

ForestModel model_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
  try {
    if (doc.at("format") != kModelFormat) throw ValidationError("model: unexpected format tag");
    if (doc.at("version") != kModelVersion) throw ValidationError("model: unsupported version");
    ForestModel m;
    m.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    const auto& hp = doc.at("hyperparameters");
    m.params.tree_count = hp.at("tree_count").get<std::size_t>();
    m.params.max_depth = hp.at("max_depth").get<std::size_t>();
    m.params.features_per_split = hp.at("features_per_split").get<std::size_t>();
    m.params.min_samples_split = hp.at("min_samples_split").get<std::size_t>();
    const auto& imp = doc.at("feature_importances");
    if (imp.size() != kFeatureCount) throw ValidationError("model: need 4 importances");
    for (std::size_t f = 0; f < kFeatureCount; ++f) m.feature_importances[f] = parse_decimal(imp[f], "importance");
    for (const auto& jt : doc.at("trees")) {
      DecisionTree t;
      for (const auto& jn : jt) {
        TreeNode n;
        n.feature = jn.at("feature").get<std::int32_t>();
        n.threshold = parse_decimal(jn.at("threshold"), "threshold");
        n.left = jn.at("left").get<std::int32_t>();
        n.right = jn.at("right").get<std::int32_t>();
        n.votes = jn.at("votes").get<Votes>();
        n.label = label_from_int(jn.at("label").get<std::int64_t>());
        t.nodes.push_back(n);
      }
      const auto size = static_cast<std::int32_t>(t.nodes.size());
      if (size == 0) throw ValidationError("model: empty tree");
      for (std::int32_t i = 0; i < size; ++i) {
        const auto& n = t.nodes[i];
        if (n.is_leaf()) continue;
        if (n.feature >= static_cast<std::int32_t>(kFeatureCount) || n.left <= i || n.right <= i ||
            n.left >= size || n.right >= size || !(n.threshold >= 0.0 && n.threshold <= 1.0)) {
          throw ValidationError("model: malformed node " + std::to_string(i));
        }
      }
      m.trees.push_back(std::move(t));
    }
    if (m.trees.size() != m.params.tree_count) throw ValidationError("model: tree count mismatch");
    return m;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
}

}  // namespace siot
