#include "mapmaint/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "mapmaint/io.hpp"
#include "mapmaint/predictors.hpp"
#include "mapmaint/rng.hpp"

namespace mapmaint {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kFitSeedStream = 0xF17;
constexpr std::uint64_t kEvalSeedStream = 0xEAA;

bool parse_bool(const std::string& value) {
  if (value == "0" || value == "false") return false;
  if (value == "1" || value == "true") return true;
  throw ParseError("expected 0/1, got '" + value + "'");
}

void set_column_flag(FitOptions& fit, const std::string& column, bool enabled) {
  auto& cols = fit.include_columns;
  const auto it = std::find(cols.begin(), cols.end(), column);
  if (enabled && it == cols.end()) cols.push_back(column);
  if (!enabled && it != cols.end()) cols.erase(it);
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (std::string_view field : split_fields(text)) {
    out.push_back(parse_double(field));
  }
  return out;
}

}  // namespace

std::vector<double> parse_rate_list(const std::string& text) {
  std::vector<double> rates = parse_double_list(text);
  for (double r : rates) {
    if (r < 0.0 || r >= 1.0) {
      throw ValidationError("drop rate " + format_double(r) + " outside [0, 1)");
    }
  }
  return rates;
}

void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value) {
  WorldConfig& w = config.world;
  FitOptions& f = config.fit;
  if (key == "n_persistent") w.n_persistent = static_cast<int>(parse_int(value));
  else if (key == "n_ephemeral") w.n_ephemeral = static_cast<int>(parse_int(value));
  else if (key == "area_width") w.area_width = parse_double(value);
  else if (key == "area_height") w.area_height = parse_double(value);
  else if (key == "loop_length") w.loop_length = parse_double(value);
  else if (key == "sensor_range") w.sensor_range = parse_double(value);
  else if (key == "detection_prob") w.detection_prob = parse_double(value);
  else if (key == "ephemeral_lifetime") w.ephemeral_lifetime = static_cast<int>(parse_int(value));
  else if (key == "n_sessions") w.n_sessions = static_cast<int>(parse_int(value));
  else if (key == "pose_spacing") w.pose_spacing = parse_double(value);
  else if (key == "trajectory_jitter") w.trajectory_jitter = parse_double(value);
  else if (key == "seed") w.seed = static_cast<std::uint64_t>(parse_int(value));
  else if (key == "cv_folds") f.cv_folds = static_cast<int>(parse_int(value));
  else if (key == "n_lambda") f.n_lambda = static_cast<int>(parse_int(value));
  else if (key == "lambda_min_ratio") f.lambda_min_ratio = parse_double(value);
  else if (key == "alphas") f.alphas = parse_double_list(value);
  else if (key.rfind("use_", 0) == 0) {
    const std::string column = key.substr(4);
    const auto& known = predictor_column_names();
    if (std::find(known.begin(), known.end(), column) == known.end()) {
      throw ParseError("unknown predictor column in '" + key + "'");
    }
    if (column == "cr_times_views" && !parse_bool(value)) {
      throw ValidationError("cr_times_views is always part of the model");
    }
    set_column_flag(f, column, parse_bool(value));
  }
  else if (key == "rates") config.rates = parse_rate_list(value);
  else if (key == "motion_sigma_v") config.motion.sigma_v = parse_double(value);
  else if (key == "motion_sigma_omega_deg") {
    config.motion.sigma_omega = parse_double(value) * M_PI / 180.0;
  }
  else if (key == "sensor_sigma_range") config.sensor.sigma_range = parse_double(value);
  else if (key == "sensor_sigma_bearing_deg") {
    config.sensor.sigma_bearing = parse_double(value) * M_PI / 180.0;
  }
  else if (key == "threads") config.threads = static_cast<unsigned>(parse_int(value));
  else throw ParseError("unknown config key '" + key + "'");
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  PipelineConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    if (line[start] == '#') continue;
    const std::size_t eq = line.find('=', start);
    if (eq == std::string::npos) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": expected key=value");
    }
    std::string key = line.substr(start, eq - start);
    std::string value = line.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    std::size_t vstart = value.find_first_not_of(" \t");
    value = (vstart == std::string::npos) ? std::string() : value.substr(vstart);
    try {
      apply_config_entry(config, key, value);
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

std::pair<std::vector<SessionLog>, std::vector<SessionLog>> split_sessions(
    const std::vector<SessionLog>& sessions) {
  if (sessions.size() < 2) {
    throw ValidationError("need at least 2 sessions to split train/holdout");
  }
  std::size_t n_train = static_cast<std::size_t>(
      std::floor(0.8 * static_cast<double>(sessions.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, sessions.size() - 1);
  std::vector<SessionLog> train(sessions.begin(),
                                sessions.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<SessionLog> holdout(sessions.begin() + static_cast<std::ptrdiff_t>(n_train),
                                  sessions.end());
  return {std::move(train), std::move(holdout)};
}

void save_curve_summary(const EvalCurve& score_curve, const EvalCurve& baseline_curve,
                        const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  char buf[128];
  out << "strategy       drop_rate  mean_max_cov  failed\n";
  for (const EvalCurve* curve : {&score_curve, &baseline_curve}) {
    for (const EvalPoint& p : curve->points) {
      std::snprintf(buf, sizeof(buf), "%-14s %-10.2f %-13.6g %s\n",
                    curve->strategy.c_str(), p.drop_rate, p.max_cov,
                    p.failed ? "yes" : "no");
      out << buf;
    }
  }
}

ReproduceArtifacts run_reproduce(const PipelineConfig& config,
                                 const fs::path& out_dir) {
  if (config.world.n_sessions < 3) {
    throw ValidationError("reproduce needs n_sessions >= 3 for a train/holdout split");
  }
  fs::create_directories(out_dir);

  ReproduceArtifacts art;
  art.world = generate_world(config.world);
  save_map(art.world.map, out_dir / "map.csv");
  save_ground_truth(art.world, config.world, out_dir / "ground_truth.csv");

  art.sessions.reserve(static_cast<std::size_t>(config.world.n_sessions));
  for (int i = 0; i < config.world.n_sessions; ++i) {
    art.sessions.push_back(simulate_session(art.world, config.world, i));
    save_session(art.sessions.back(), out_dir / "sessions");
  }

  auto [train, holdout] = split_sessions(art.sessions);

  art.matrix_train = build_matrix(art.world.map, train, kNeighbourRadiusM,
                                  config.threads);
  save_predictor_matrix(art.matrix_train, out_dir / "predictors_train.csv");
  art.matrix_all = build_matrix(art.world.map, art.sessions, kNeighbourRadiusM,
                                config.threads);
  save_predictor_matrix(art.matrix_all, out_dir / "predictors.csv");

  art.labels = empirical_probability(art.world.map, train);
  save_labels(art.matrix_train.landmark_ids, art.labels, out_dir / "labels.csv");

  FitOptions fit_options = config.fit;
  fit_options.seed = derive_seed(config.world.seed, kFitSeedStream);
  art.model = fit_model(art.matrix_train, art.labels, fit_options);
  save_model(art.model, out_dir / "model.txt");

  {
    auto [Z, st] = standardize(art.matrix_train.values, art.matrix_train.column_names);
    const PredictorDiagnostics diag = predictor_diagnostics(
        Z, art.labels, st.column_names, fit_options.cv_folds, fit_options.seed);
    save_diagnostics(diag, out_dir / "diagnostics.csv");
  }

  art.scores = score(art.model, art.matrix_all);
  save_scores(art.matrix_all.landmark_ids, art.scores, out_dir / "scores.csv");

  const std::vector<double> score_vec(art.scores.data(),
                                      art.scores.data() + art.scores.size());
  art.threshold = find_threshold(score_vec);
  save_threshold_report(art.threshold, out_dir / "threshold_report.txt");
  std::tie(art.kept, art.discarded) =
      prune_map(art.world.map, score_vec, art.threshold.threshold);
  save_map(art.kept, out_dir / "map_kept.csv");
  save_map(art.discarded, out_dir / "map_discarded.csv");

  const Eigen::VectorXd track = art.matrix_all.column("track_length");
  const std::vector<double> baseline(track.data(), track.data() + track.size());
  std::tie(art.score_curve, art.baseline_curve) = drop_curve(
      art.world.map, score_vec, baseline, holdout, config.rates, config.motion,
      config.sensor, derive_seed(config.world.seed, kEvalSeedStream),
      config.threads);
  save_curves(art.score_curve, art.baseline_curve, out_dir / "curve.csv");
  save_curve_summary(art.score_curve, art.baseline_curve, out_dir / "summary.txt");
  return art;
}

}  // namespace mapmaint
