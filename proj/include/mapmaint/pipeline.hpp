#pragma once

// End-to-end orchestration: configuration file handling and the
// simulate -> predictors -> label -> fit -> score -> prune -> evaluate chain
// behind the `reproduce` command. Every stage is a pure function of its
// inputs and the master seed.

#include <filesystem>
#include <vector>

#include "mapmaint/evaluation.hpp"
#include "mapmaint/labeling.hpp"
#include "mapmaint/regression.hpp"
#include "mapmaint/selection.hpp"
#include "mapmaint/simulator.hpp"

namespace mapmaint {

struct PipelineConfig {
  WorldConfig world;
  FitOptions fit;
  std::vector<double> rates = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5,
                               0.6, 0.7, 0.8, 0.85, 0.9, 0.95};
  MotionNoise motion;
  SensorNoise sensor;
  unsigned threads = 1;
};

// key=value text, '#' comments; unknown keys are rejected. Angle noise keys
// take degrees (motion_sigma_omega_deg, sensor_sigma_bearing_deg).
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
// Applies one key=value assignment (used for both files and CLI overrides).
void apply_config_entry(PipelineConfig& config, const std::string& key,
                        const std::string& value);

std::vector<double> parse_rate_list(const std::string& text);

// Chronological split: first floor(0.8 n) sessions train the model, the rest
// are held out for evaluation.
std::pair<std::vector<SessionLog>, std::vector<SessionLog>> split_sessions(
    const std::vector<SessionLog>& sessions);

struct ReproduceArtifacts {
  World world;
  std::vector<SessionLog> sessions;
  PredictorMatrix matrix_train;  // fitting window
  PredictorMatrix matrix_all;    // full observation record, used for scoring
  Eigen::VectorXd labels;
  ScoringModel model;
  Eigen::VectorXd scores;
  ThresholdReport threshold;
  FeatureMap kept;
  FeatureMap discarded;
  EvalCurve score_curve;
  EvalCurve baseline_curve;
};

// Runs the full chain and writes every artifact under out_dir. Output bytes
// depend only on the configuration (including the seed), never on wall time
// or thread count.
ReproduceArtifacts run_reproduce(const PipelineConfig& config,
                                 const std::filesystem::path& out_dir);

void save_curve_summary(const EvalCurve& score_curve, const EvalCurve& baseline_curve,
                        const std::filesystem::path& path);

}  // namespace mapmaint
