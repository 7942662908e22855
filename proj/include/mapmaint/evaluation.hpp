#pragma once

// Known-map range-bearing EKF localisation and the covariance-versus-drop-rate
// comparison between score-ranked and track-length-ranked map subsets.
//
// Odometry is derived from consecutive logged poses and corrupted with the
// configured motion noise; detections are associated to map landmarks by
// gated nearest neighbour in Mahalanobis distance.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mapmaint/types.hpp"

namespace mapmaint {

struct EkfState {
  Eigen::Vector3d mean;        // x, y, heading
  Eigen::Matrix3d covariance;  // symmetric positive definite
};

struct MotionNoise {
  double sigma_v = 0.1;                   // metres per step, per axis
  double sigma_omega = 0.5 * M_PI / 180;  // radians per step
};

struct SensorNoise {
  double sigma_range = 0.05;                // metres
  double sigma_bearing = 0.5 * M_PI / 180;  // radians
};

// chi-squared gate, 2 dof, 0.99.
inline constexpr double kAssociationGate = 9.21;
// A gated detection is used only when the runner-up candidate is at least
// this much further away in squared Mahalanobis distance.
inline constexpr double kAmbiguityMarginD2 = 4.0;
// A run fails once the position-covariance trace passes this, or when fewer
// than kMinAssociatedFraction of its detections associate.
inline constexpr double kFailureTraceM2 = 25.0;
inline constexpr double kMinAssociatedFraction = 0.10;

struct EkfRun {
  std::vector<EkfState> states;  // one per pose, after the measurement update
  bool failed = false;
  double associated_fraction = 0.0;
  std::size_t total_events = 0;
};

EkfRun ekf_localize(const FeatureMap& map, const SessionLog& session,
                    const MotionNoise& motion, const SensorNoise& sensor,
                    std::uint64_t seed);

// Largest eigenvalue of the 2x2 position block, maximised over the run.
double max_cov_magnitude(const std::vector<EkfState>& states);

struct EvalPoint {
  double drop_rate = 0.0;
  double max_cov = 0.0;  // mean over sessions of the per-session maximum
  bool failed = false;   // any session failed
};

struct EvalCurve {
  std::string strategy;  // "score" or "track_length"
  std::vector<EvalPoint> points;
};

// Runs the EKF over every held-out session for each drop rate under both
// rankings. Rates are sorted and deduplicated; per-session noise seeds derive
// from `seed` and the session id alone, so both strategies and all drop
// rates see identical odometry for a given session.
std::pair<EvalCurve, EvalCurve> drop_curve(const FeatureMap& map,
                                           const std::vector<double>& scores,
                                           const std::vector<double>& baseline_keys,
                                           const std::vector<SessionLog>& eval_sessions,
                                           std::vector<double> drop_rates,
                                           const MotionNoise& motion = {},
                                           const SensorNoise& sensor = {},
                                           std::uint64_t seed = 0,
                                           unsigned threads = 1);

void save_curves(const EvalCurve& score_curve, const EvalCurve& baseline_curve,
                 const std::filesystem::path& path);

}  // namespace mapmaint
