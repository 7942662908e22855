// mapmaint - landmark persistence scoring and feature-map maintenance.
//
// Subcommands cover the full pipeline: simulate a multi-session world,
// compute predictors and labels, fit the elastic-net scoring model, score and
// prune a map, evaluate pruned maps with the range-bearing EKF, and
// reproduce the whole chain from one seed.

#include <CLI11.hpp>

#include <iostream>

#include "mapmaint/io.hpp"
#include "mapmaint/pipeline.hpp"
#include "mapmaint/predictors.hpp"

namespace {

using namespace mapmaint;
namespace fs = std::filesystem;

struct CommonArgs {
  std::string config_path;
  std::string map_path;
  std::string sessions_dir;
  std::string predictors_path;
  std::string labels_path;
  std::string model_path;
  std::string scores_path;
  std::string out_path;
  std::string rates_text;
  std::int64_t seed = -1;  // -1: keep config value
  unsigned threads = 1;
};

PipelineConfig resolve_config(const CommonArgs& args) {
  PipelineConfig config;
  if (!args.config_path.empty()) config = load_pipeline_config(args.config_path);
  if (args.seed >= 0) config.world.seed = static_cast<std::uint64_t>(args.seed);
  if (!args.rates_text.empty()) config.rates = parse_rate_list(args.rates_text);
  if (args.threads > 0) config.threads = args.threads;
  return config;
}

void cmd_simulate(const CommonArgs& args) {
  const PipelineConfig config = resolve_config(args);
  const fs::path out(args.out_path);
  fs::create_directories(out);
  const World world = generate_world(config.world);
  save_map(world.map, out / "map.csv");
  save_ground_truth(world, config.world, out / "ground_truth.csv");
  for (int i = 0; i < config.world.n_sessions; ++i) {
    save_session(simulate_session(world, config.world, i), out / "sessions");
  }
  std::cout << "wrote map (" << world.map.size() << " landmarks) and "
            << config.world.n_sessions << " sessions to " << out.string() << '\n';
}

void cmd_predictors(const CommonArgs& args) {
  const FeatureMap map = load_map(args.map_path);
  const std::vector<SessionLog> sessions = load_sessions(args.sessions_dir);
  const PredictorMatrix matrix =
      build_matrix(map, sessions, kNeighbourRadiusM, args.threads);
  save_predictor_matrix(matrix, args.out_path);
  std::cout << "wrote " << matrix.landmark_ids.size() << " predictor rows to "
            << args.out_path << '\n';
}

void cmd_label(const CommonArgs& args) {
  const FeatureMap map = load_map(args.map_path);
  const std::vector<SessionLog> sessions = load_sessions(args.sessions_dir);
  const Eigen::VectorXd labels = empirical_probability(map, sessions);
  std::vector<std::int64_t> ids;
  ids.reserve(map.size());
  for (const Landmark& lm : map.landmarks()) ids.push_back(lm.id);
  save_labels(ids, labels, args.out_path);
  std::cout << "wrote " << ids.size() << " labels to " << args.out_path << '\n';
}

void cmd_fit(const CommonArgs& args) {
  const PipelineConfig config = resolve_config(args);
  const PredictorMatrix matrix = load_predictor_matrix(args.predictors_path);
  auto [ids, labels] = load_labels(args.labels_path);
  if (ids != matrix.landmark_ids) {
    throw ValidationError("label ids do not match predictor matrix ids");
  }
  FitOptions options = config.fit;
  if (args.seed >= 0) options.seed = static_cast<std::uint64_t>(args.seed);
  const ScoringModel model = fit_model(matrix, labels, options);
  save_model(model, args.model_path);
  std::cout << "fit alpha=" << model.alpha << " lambda=" << model.lambda
            << " with " << model.standardization.column_names.size()
            << " predictors -> " << args.model_path << '\n';
}

void cmd_score(const CommonArgs& args) {
  const ScoringModel model = load_model(args.model_path);
  const PredictorMatrix matrix = load_predictor_matrix(args.predictors_path);
  const Eigen::VectorXd scores = score(model, matrix);
  save_scores(matrix.landmark_ids, scores, args.out_path);
  std::cout << "wrote " << matrix.landmark_ids.size() << " scores to "
            << args.out_path << '\n';
}

void cmd_prune(const CommonArgs& args) {
  const FeatureMap map = load_map(args.map_path);
  auto [ids, scores] = load_scores(args.scores_path);
  if (ids.size() != map.size()) {
    throw ValidationError("score count does not match map size");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] != map.at(i).id) {
      throw ValidationError("score ids do not match map id order");
    }
  }
  const std::vector<double> score_vec(scores.data(), scores.data() + scores.size());
  const ThresholdReport report = find_threshold(score_vec);
  auto [kept, discarded] = prune_map(map, score_vec, report.threshold);

  const fs::path out(args.out_path);
  fs::create_directories(out);
  save_map(kept, out / "map_kept.csv");
  save_map(discarded, out / "map_discarded.csv");
  save_threshold_report(report, out / "threshold_report.txt");
  std::cout << "kept " << kept.size() << ", discarded " << discarded.size()
            << " (threshold " << report.threshold
            << (report.unimodal_fallback ? ", unimodal fallback)" : ")") << '\n';
}

void cmd_evaluate(const CommonArgs& args) {
  const PipelineConfig config = resolve_config(args);
  const FeatureMap map = load_map(args.map_path);
  const std::vector<SessionLog> sessions = load_sessions(args.sessions_dir);
  auto [ids, scores] = load_scores(args.scores_path);
  if (ids.size() != map.size()) {
    throw ValidationError("score count does not match map size");
  }

  // Baseline ranking: travelled distance while observing. Taken from a
  // predictor CSV when given, otherwise recomputed from the session logs.
  PredictorMatrix matrix;
  if (!args.predictors_path.empty()) {
    matrix = load_predictor_matrix(args.predictors_path);
  } else {
    matrix = build_matrix(map, sessions, kNeighbourRadiusM, config.threads);
  }
  const Eigen::VectorXd track = matrix.column("track_length");

  const std::vector<double> score_vec(scores.data(), scores.data() + scores.size());
  const std::vector<double> baseline(track.data(), track.data() + track.size());
  auto [score_curve, baseline_curve] =
      drop_curve(map, score_vec, baseline, sessions, config.rates, config.motion,
                 config.sensor, config.world.seed, config.threads);

  const fs::path out(args.out_path);
  fs::create_directories(out);
  save_curves(score_curve, baseline_curve, out / "curve.csv");
  save_curve_summary(score_curve, baseline_curve, out / "summary.txt");
  std::cout << "evaluated " << config.rates.size() << " drop rates over "
            << sessions.size() << " sessions -> " << (out / "curve.csv").string()
            << '\n';
}

void cmd_reproduce(const CommonArgs& args) {
  const PipelineConfig config = resolve_config(args);
  run_reproduce(config, args.out_path);
  std::cout << "reproduced full pipeline in " << args.out_path << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feature-map maintenance: landmark persistence scoring,\n"
               "map pruning and localisation-based evaluation"};
  app.require_subcommand(1);

  CommonArgs args;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", args.seed, "master seed (overrides config)");
    cmd->add_option("--config", args.config_path, "key=value configuration file");
    cmd->add_option("--threads", args.threads, "worker threads (default 1)");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate a synthetic world");
  add_common(simulate);
  simulate->add_option("--out", args.out_path, "output directory")->required();
  simulate->callback([&] { cmd_simulate(args); });

  CLI::App* predictors =
      app.add_subcommand("predictors", "accumulate per-landmark predictors");
  add_common(predictors);
  predictors->add_option("--map", args.map_path, "map file")->required();
  predictors->add_option("--sessions", args.sessions_dir, "session directory")->required();
  predictors->add_option("--out", args.out_path, "predictor CSV")->required();
  predictors->callback([&] { cmd_predictors(args); });

  CLI::App* label = app.add_subcommand("label", "empirical re-observation labels");
  add_common(label);
  label->add_option("--map", args.map_path, "map file")->required();
  label->add_option("--sessions", args.sessions_dir, "session directory")->required();
  label->add_option("--out", args.out_path, "label CSV")->required();
  label->callback([&] { cmd_label(args); });

  CLI::App* fit = app.add_subcommand("fit", "cross-validated elastic-net fit");
  add_common(fit);
  fit->add_option("--predictors", args.predictors_path, "predictor CSV")->required();
  fit->add_option("--labels", args.labels_path, "label CSV")->required();
  fit->add_option("--model", args.model_path, "model file to write")->required();
  fit->callback([&] { cmd_fit(args); });

  CLI::App* score = app.add_subcommand("score", "score landmarks with a model");
  add_common(score);
  score->add_option("--model", args.model_path, "model file")->required();
  score->add_option("--predictors", args.predictors_path, "predictor CSV")->required();
  score->add_option("--out", args.out_path, "score CSV")->required();
  score->callback([&] { cmd_score(args); });

  CLI::App* prune = app.add_subcommand("prune", "threshold scores and split the map");
  add_common(prune);
  prune->add_option("--map", args.map_path, "map file")->required();
  prune->add_option("--scores", args.scores_path, "score CSV")->required();
  prune->add_option("--out", args.out_path, "output directory")->required();
  prune->callback([&] { cmd_prune(args); });

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "covariance versus drop rate curves");
  add_common(evaluate);
  evaluate->add_option("--map", args.map_path, "map file")->required();
  evaluate->add_option("--scores", args.scores_path, "score CSV")->required();
  evaluate->add_option("--sessions", args.sessions_dir, "held-out session directory")
      ->required();
  evaluate->add_option("--rates", args.rates_text, "comma-separated drop rates");
  evaluate->add_option("--predictors", args.predictors_path,
                       "predictor CSV for the track-length baseline "
                       "(recomputed from sessions when omitted)");
  evaluate->add_option("--out", args.out_path, "output directory")->required();
  evaluate->callback([&] { cmd_evaluate(args); });

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "run the whole pipeline from one seed");
  add_common(reproduce);
  reproduce->add_option("--out", args.out_path, "output directory")->required();
  reproduce->add_option("--rates", args.rates_text, "comma-separated drop rates");
  reproduce->callback([&] { cmd_reproduce(args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << app.help() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
