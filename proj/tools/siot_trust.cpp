// siot-trust: command-line front end for the trust pipeline.
//
//   siot-trust features  --trace DIR --out FILE
//   siot-trust label     --features FILE --out FILE [--k-min --k-max --seed --plot-dir]
//   siot-trust train     --features FILE --labels FILE --model-out FILE [...]
//   siot-trust aggregate --trace DIR --labels FILE --out FILE [--theta --sweep --ground-truth]
//   siot-trust simulate  --out DIR [generator flags] [--full-pipeline] [--attack KIND ...]
//
// Exit codes: 0 success, 1 input or configuration error, 2 internal error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "siot/aggregate.hpp"
#include "siot/csv.hpp"
#include "siot/error.hpp"
#include "siot/features.hpp"
#include "siot/forest.hpp"
#include "siot/kmeans.hpp"
#include "siot/rng.hpp"
#include "siot/sim.hpp"

namespace fs = std::filesystem;
using namespace siot;

namespace {

struct ExternalPair {
  std::int64_t trustor;
  std::int64_t trustee;
  auto operator<=>(const ExternalPair&) const = default;
};

constexpr std::array<std::pair<Feature, Feature>, 6> kPlotPairs = {{
    {Feature::FriendshipSimilarity, Feature::CommunityOfInterest},
    {Feature::FriendshipSimilarity, Feature::Reward},
    {Feature::FriendshipSimilarity, Feature::Cooperativeness},
    {Feature::CommunityOfInterest, Feature::Reward},
    {Feature::CommunityOfInterest, Feature::Cooperativeness},
    {Feature::Reward, Feature::Cooperativeness},
}};

std::string plot_name(const char* prefix, Feature a, Feature b) {
  return std::string(prefix) + "_" + std::string(feature_name(a)) + "_" + std::string(feature_name(b)) + ".csv";
}

fs::path plot_dir_or_default(const std::string& plot_dir, const std::string& out_file) {
  fs::path dir = plot_dir.empty() ? fs::path(out_file).parent_path() : fs::path(plot_dir);
  if (dir.empty()) dir = ".";
  fs::create_directories(dir);
  return dir;
}

std::string labels_to_csv(std::span<const ExternalPair> pairs, std::span<const TrustLabel> labels) {
  std::ostringstream out;
  out << "trustor,trustee,label\n";
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out << pairs[k].trustor << ',' << pairs[k].trustee << ',' << to_int(labels[k]) << '\n';
  }
  return out.str();
}

std::map<ExternalPair, TrustLabel> read_labels_csv(const std::string& path) {
  std::map<ExternalPair, TrustLabel> out;
  for (const auto& row : csv::read(path, "trustor,trustee,label")) {
    ExternalPair p{csv::to_int(row, 0, path), csv::to_int(row, 1, path)};
    try {
      out[p] = label_from_int(csv::to_int(row, 2, path));
    } catch (const ValidationError& e) {
      throw ParseError(path, row.line, e.what());
    }
  }
  return out;
}

std::vector<double> parse_theta_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    double v = 0.0;
    try {
      std::size_t used = 0;
      v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad theta value '" + item + "' in --sweep");
    }
    out.push_back(AggregationConfig(v).theta());
  }
  if (out.empty()) throw ConfigError("--sweep needs at least one theta");
  return out;
}

// ---------------------------------------------------------------------------

struct FeaturesArgs {
  std::string trace_dir;
  std::string out;
};

int cmd_features(const FeaturesArgs& a) {
  const SocialGraph graph = ingest_trace(TracePaths::in_directory(a.trace_dir));
  const FeatureTable table = compute_features(graph);
  csv::write_file(a.out, features_to_csv(graph, table));
  spdlog::info("wrote {} feature rows to {}", table.pairs.size(), a.out);
  std::cout << "pairs: " << table.pairs.size() << "\n";
  return 0;
}

struct LabelArgs {
  std::string features;
  std::string out;
  std::string plot_dir;
  std::size_t k_min = 1;
  std::size_t k_max = 8;
  std::size_t restarts = 5;
  std::uint64_t seed = 0;
};

int cmd_label(const LabelArgs& a) {
  const auto rows = read_features_csv(a.features);
  if (rows.empty()) throw InsufficientDataError(a.features + " holds no feature rows");
  std::vector<Point> points;
  std::vector<ExternalPair> pairs;
  for (const auto& r : rows) {
    points.push_back(r.features.as_array());
    pairs.push_back({r.trustor, r.trustee});
  }
  KMeansOptions opts;
  opts.restarts = a.restarts;
  const auto curve = cost_curve(points, a.k_min, a.k_max, a.seed, opts);
  const std::size_t elbow_k = elbow_from_curve(curve, a.k_min);
  std::cout << "elbow k: " << elbow_k << "\n";

  if (distinct_count(points) < 3) throw InfeasibleError("fewer than 3 distinct feature vectors");
  const auto clustering = kmeans_best_of(points, 3, mix_seed(a.seed, 1003), opts);
  const auto labels = label_clusters(clustering);
  csv::write_file(a.out, labels_to_csv(pairs, labels));

  std::array<std::size_t, kLabelCount> counts{};
  for (auto l : labels) ++counts[static_cast<std::size_t>(l)];
  std::cout << "labels: untrustworthy=" << counts[0] << " trustworthy=" << counts[1]
            << " neutral=" << counts[2] << "\n";

  const fs::path dir = plot_dir_or_default(a.plot_dir, a.out);
  std::ostringstream elbow;
  elbow << "k,cost\n";
  for (std::size_t i = 0; i < curve.size(); ++i) elbow << a.k_min + i << ',' << csv::fixed6(curve[i]) << '\n';
  csv::write_file((dir / "elbow.csv").string(), elbow.str());
  for (const auto& [fx, fy] : kPlotPairs) {
    std::ostringstream s;
    s << "x,y,label\n";
    for (std::size_t k = 0; k < points.size(); ++k) {
      s << csv::fixed6(points[k][static_cast<std::size_t>(fx)]) << ','
        << csv::fixed6(points[k][static_cast<std::size_t>(fy)]) << ',' << to_int(labels[k]) << '\n';
    }
    csv::write_file((dir / plot_name("scatter", fx, fy)).string(), s.str());
  }
  return 0;
}

struct TrainArgs {
  std::string features;
  std::string labels;
  std::string model_out;
  std::string plot_dir;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  ForestParams forest;
  std::size_t grid_resolution = 50;
};

int cmd_train(const TrainArgs& a) {
  const auto rows = read_features_csv(a.features);
  const auto labels = read_labels_csv(a.labels);
  if (rows.size() != labels.size()) {
    throw ValidationError("features file has " + std::to_string(rows.size()) +
                          " rows but labels file has " + std::to_string(labels.size()));
  }
  std::vector<Point> xs;
  std::vector<TrustLabel> ys;
  for (const auto& r : rows) {
    auto it = labels.find({r.trustor, r.trustee});
    if (it == labels.end()) {
      throw ValidationError("no label for pair (" + std::to_string(r.trustor) + "," +
                            std::to_string(r.trustee) + ")");
    }
    xs.push_back(r.features.as_array());
    ys.push_back(it->second);
  }
  if (!(a.train_fraction > 0.0 && a.train_fraction < 1.0)) {
    throw ConfigError("--train-fraction must be in (0,1)");
  }
  const TrainResult res = train_forest(xs, ys, {a.train_fraction, a.seed}, a.forest);
  csv::write_file(a.model_out, model_to_json(res.model));

  std::cout << "held-out accuracy: " << csv::fixed6(res.held_out_accuracy) << "\n";
  std::cout << "train accuracy: " << csv::fixed6(res.train_accuracy) << "\n";
  std::cout << "importances:";
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    std::cout << ' ' << kFeatureNames[f] << '=' << csv::fixed6(res.model.feature_importances[f]);
  }
  std::cout << "\n";

  const fs::path dir = plot_dir_or_default(a.plot_dir, a.model_out);
  std::ostringstream imp;
  imp << "feature,importance\n";
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    imp << kFeatureNames[f] << ',' << csv::fixed6(res.model.feature_importances[f]) << '\n';
  }
  csv::write_file((dir / "importances.csv").string(), imp.str());

  // Features off the plotted plane sit at their sample means.
  Point mean{};
  for (const auto& x : xs) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) mean[f] += x[f];
  }
  for (auto& m : mean) m /= static_cast<double>(xs.size());
  for (const auto& [fx, fy] : kPlotPairs) {
    std::ostringstream s;
    s << "x,y,label\n";
    for (const auto& c : decision_boundary_grid(res.model, fx, fy, mean, a.grid_resolution)) {
      s << csv::fixed6(c.x) << ',' << csv::fixed6(c.y) << ',' << to_int(c.label) << '\n';
    }
    csv::write_file((dir / plot_name("boundary", fx, fy)).string(), s.str());
  }
  return 0;
}

struct AggregateArgs {
  std::string trace_dir;
  std::string labels;
  std::string out;
  double theta = 0.7;
  std::string sweep;
  std::string ground_truth;
  std::string sweep_out;
};

int cmd_aggregate(const AggregateArgs& a) {
  const AggregationConfig cfg(a.theta);
  std::vector<double> thetas;
  if (!a.sweep.empty()) {
    if (a.ground_truth.empty()) throw ConfigError("--sweep requires --ground-truth");
    thetas = parse_theta_list(a.sweep);
  }
  const SocialGraph graph = ingest_trace(TracePaths::in_directory(a.trace_dir));
  LabelTable table;
  for (const auto& [p, label] : read_labels_csv(a.labels)) {
    const auto i = graph.find_external(p.trustor);
    const auto j = graph.find_external(p.trustee);
    if (!i || !j) {
      throw IntegrityError(a.labels + ": pair (" + std::to_string(p.trustor) + "," +
                           std::to_string(p.trustee) + ") names a node not in the trace");
    }
    table[{*i, *j}] = label;
  }
  for (const auto& p : interacting_pairs(graph)) {
    if (!table.contains(p)) {
      throw ValidationError(a.labels + " has no label for interacting pair (" +
                            std::to_string(graph.external_id(p.trustor)) + "," +
                            std::to_string(graph.external_id(p.trustee)) + ")");
    }
  }
  const auto verdicts = estimate_all(graph, table, cfg);
  csv::write_file(a.out, verdicts_to_csv(graph, verdicts));
  std::size_t trusted = 0;
  for (const auto& v : verdicts) trusted += v.verdict == TrustVerdict::Trustworthy ? 1 : 0;
  std::cout << "verdicts: " << verdicts.size() << " trustworthy=" << trusted << "\n";

  if (!thetas.empty()) {
    const VerdictTable truth = read_ground_truth_csv(a.ground_truth, graph);
    const auto sweep = theta_sweep(graph, table, truth, thetas);
    std::string sweep_out = a.sweep_out;
    if (sweep_out.empty()) sweep_out = (plot_dir_or_default("", a.out) / "theta_sweep.csv").string();
    csv::write_file(sweep_out, sweep_to_csv(sweep));
    for (const auto& p : sweep) {
      std::cout << "theta " << csv::fixed6(p.theta) << " accuracy " << csv::fixed6(p.accuracy) << "\n";
    }
  }
  return 0;
}

struct SimulateArgs {
  std::string out;
  SimConfig sim;
  bool full_pipeline = false;
  std::string attack = "none";
  double attacker_fraction = 0.3;
  double intensity = 1.0;
  PipelineParams pipeline;
  std::string direct_source = "forest";
};

int cmd_simulate(SimulateArgs a) {
  AttackSpec attack;
  attack.kind = parse_attack(a.attack);
  if (attack.kind != AttackKind::None) {
    attack.attacker_fraction = a.attacker_fraction;
    attack.intensity = a.intensity;
    a.full_pipeline = true;
  }
  attack.validate();
  (void)AggregationConfig(a.pipeline.theta);
  if (a.direct_source == "forest") {
    a.pipeline.direct_source = DirectSource::Forest;
  } else if (a.direct_source == "kmeans") {
    a.pipeline.direct_source = DirectSource::KMeans;
  } else {
    throw ConfigError("--direct-source must be forest or kmeans");
  }

  SimTrace trace = generate_trace(a.sim);
  write_sim_output(trace, a.out);
  std::cout << "nodes: " << trace.graph.node_count()
            << " interactions: " << trace.graph.interactions().size() << "\n";
  if (!a.full_pipeline) return 0;

  const ExperimentRun run = run_pipeline(std::move(trace), a.sim, attack, a.pipeline);
  const fs::path dir(a.out);
  csv::write_file((dir / "report.json").string(), run.report.to_json());
  csv::write_file((dir / "features.csv").string(), features_to_csv(run.trace.graph, run.features));
  std::vector<ExternalPair> pairs;
  for (const auto& p : run.features.pairs) {
    pairs.push_back({run.trace.graph.external_id(p.trustor), run.trace.graph.external_id(p.trustee)});
  }
  csv::write_file((dir / "labels.csv").string(), labels_to_csv(pairs, run.cluster_labels));
  csv::write_file((dir / "verdicts.csv").string(), verdicts_to_csv(run.trace.graph, run.verdicts));
  std::ostringstream sweep;
  sweep << "theta,accuracy,false_trust_rate,false_distrust_rate\n";
  for (const auto& s : run.report.sweep) {
    sweep << csv::fixed6(s.theta) << ',' << csv::fixed6(s.metrics.accuracy) << ','
          << csv::fixed6(s.metrics.false_trust_rate) << ',' << csv::fixed6(s.metrics.false_distrust_rate) << '\n';
  }
  csv::write_file((dir / "theta_sweep.csv").string(), sweep.str());

  const auto& r = run.report;
  std::cout << "elbow k: " << r.elbow_k << "\n"
            << "forest held-out accuracy: " << csv::fixed6(r.forest_held_out_accuracy) << "\n"
            << "direct-only accuracy: " << csv::fixed6(r.direct_only.accuracy) << "\n"
            << "aggregate accuracy: " << csv::fixed6(r.aggregate.accuracy)
            << " false-trust: " << csv::fixed6(r.aggregate.false_trust_rate)
            << " false-distrust: " << csv::fixed6(r.aggregate.false_distrust_rate) << "\n";
  return 0;
}

void configure_logging() {
  spdlog::set_default_logger(spdlog::stderr_color_mt("siot-trust"));
  spdlog::set_pattern("[siot-trust] [%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("SIOT_TRUST_LOG")) {
    spdlog::set_level(spdlog::level::from_str(env));
  }
}

void add_forest_flags(CLI::App* cmd, ForestParams& p) {
  cmd->add_option("--trees", p.tree_count, "Number of trees")->check(CLI::PositiveNumber);
  cmd->add_option("--max-depth", p.max_depth, "Maximum tree depth")->check(CLI::PositiveNumber);
  cmd->add_option("--features-per-split", p.features_per_split, "Candidate features per split")
      ->check(CLI::Range(1, 4));
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Trust features, clustering, forest training and recommendation fusion for SIoT traces"};
  app.require_subcommand(1);

  FeaturesArgs fa;
  auto* features = app.add_subcommand("features", "Compute the feature matrix of a trace");
  features->add_option("--trace", fa.trace_dir, "Trace directory")->required();
  features->add_option("--out", fa.out, "Output CSV")->required();

  LabelArgs la;
  auto* label = app.add_subcommand("label", "Pick k by the elbow rule and label pairs with 3-means");
  label->add_option("--features", la.features, "Feature CSV")->required();
  label->add_option("--out", la.out, "Output label CSV")->required();
  label->add_option("--k-min", la.k_min, "Smallest k on the cost curve")->check(CLI::PositiveNumber);
  label->add_option("--k-max", la.k_max, "Largest k on the cost curve")->check(CLI::PositiveNumber);
  label->add_option("--restarts", la.restarts, "Restarts per k")->check(CLI::PositiveNumber);
  label->add_option("--seed", la.seed, "Random seed");
  label->add_option("--plot-dir", la.plot_dir, "Directory for scatter and elbow plot data");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the random forest on labeled features");
  train->add_option("--features", ta.features, "Feature CSV")->required();
  train->add_option("--labels", ta.labels, "Label CSV")->required();
  train->add_option("--model-out", ta.model_out, "Output model JSON")->required();
  train->add_option("--seed", ta.seed, "Random seed");
  train->add_option("--train-fraction", ta.train_fraction, "Training share of the split");
  train->add_option("--plot-dir", ta.plot_dir, "Directory for importance and boundary plot data");
  train->add_option("--grid-resolution", ta.grid_resolution, "Decision grid resolution")
      ->check(CLI::PositiveNumber);
  add_forest_flags(train, ta.forest);

  AggregateArgs aa;
  auto* aggregate = app.add_subcommand("aggregate", "Fuse direct labels with recommendations");
  aggregate->add_option("--trace", aa.trace_dir, "Trace directory")->required();
  aggregate->add_option("--labels", aa.labels, "Direct-trust label CSV")->required();
  aggregate->add_option("--out", aa.out, "Output verdict CSV")->required();
  aggregate->add_option("--theta", aa.theta, "Recommendation threshold in (0,1]");
  aggregate->add_option("--sweep", aa.sweep, "Comma-separated thetas to evaluate");
  aggregate->add_option("--ground-truth", aa.ground_truth, "Ground truth CSV for --sweep");
  aggregate->add_option("--sweep-out", aa.sweep_out, "Output theta-accuracy CSV");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic trace, optionally run the pipeline");
  simulate->add_option("--out", sa.out, "Output directory")->required();
  simulate->add_option("--nodes", sa.sim.node_count, "Node count");
  simulate->add_option("--malicious-fraction", sa.sim.malicious_fraction, "Share of malicious nodes");
  simulate->add_option("--communities", sa.sim.community_count, "Number of interest communities");
  simulate->add_option("--interactions", sa.sim.interaction_count, "Number of interaction records");
  simulate->add_option("--duration", sa.sim.duration, "Trace length in seconds");
  simulate->add_option("--seed", sa.sim.rng_seed, "Experiment seed");
  simulate->add_flag("--full-pipeline", sa.full_pipeline, "Run the whole pipeline and write report.json");
  simulate->add_option("--attack", sa.attack,
                       "none, ballot_stuffing, bad_mouthing, self_promoting, whitewashing");
  simulate->add_option("--attacker-fraction", sa.attacker_fraction, "Share of attacking nodes");
  simulate->add_option("--intensity", sa.intensity, "Attack intensity in [0,1]");
  simulate->add_option("--theta", sa.pipeline.theta, "Recommendation threshold in (0,1]");
  simulate->add_option("--k-min", sa.pipeline.k_min, "Smallest k on the cost curve")->check(CLI::PositiveNumber);
  simulate->add_option("--k-max", sa.pipeline.k_max, "Largest k on the cost curve")->check(CLI::PositiveNumber);
  simulate->add_option("--train-fraction", sa.pipeline.train_fraction, "Training share of the split");
  simulate->add_option("--direct-source", sa.direct_source, "forest or kmeans");
  add_forest_flags(simulate, sa.pipeline.forest);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*features) return cmd_features(fa);
    if (*label) return cmd_label(la);
    if (*train) return cmd_train(ta);
    if (*aggregate) return cmd_aggregate(aa);
    if (*simulate) return cmd_simulate(sa);
  } catch (const std::logic_error& e) {
    std::cerr << "siot-trust: internal error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "siot-trust: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
