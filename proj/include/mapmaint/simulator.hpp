#pragma once

// Synthetic worlds and multi-session drive logs with planted persistent and
// ephemeral landmarks. The vehicle repeats a rounded-rectangle loop with
// per-session lateral jitter; ephemeral landmarks (parked-vehicle analogues,
// placed close to the road) vanish after a per-landmark last-present session.

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "mapmaint/types.hpp"

namespace mapmaint {

struct WorldConfig {
  int n_persistent = 200;
  int n_ephemeral = 100;
  double area_width = 240.0;   // metres, box centred on the loop
  double area_height = 150.0;
  double loop_length = 500.0;
  double sensor_range = 30.0;
  double detection_prob = 0.9;   // per scan, for visible present landmarks
  int ephemeral_lifetime = 7;    // cap (sessions) on the last-present draw
  int n_sessions = 26;           // weekly drives over roughly six months
  double pose_spacing = 0.5;     // metres between consecutive poses
  double trajectory_jitter = 0.5;  // metres SD of lateral deviation
  std::uint64_t seed = 42;

  void validate() const;  // throws ValidationError
};

struct World {
  FeatureMap map;  // persistent flags populated
  // landmark_id -> last session index in which the landmark is present;
  // keys are exactly the non-persistent landmarks.
  std::map<std::int64_t, int> ephemeral_schedule;
};

// Landmark noise used when emitting detections. Small enough not to disturb
// the 1-degree angle binning at ranges beyond a few metres; draws are clamped
// at three sigma so event ranges stay within sensor_range + 3*sigma_r.
inline constexpr double kSimRangeNoiseSd = 0.05;
inline constexpr double kSimBearingNoiseSd = 0.5 * M_PI / 180.0;

World generate_world(const WorldConfig& config);

std::vector<VehiclePose> generate_trajectory(const WorldConfig& config,
                                             int session_index);

SessionLog simulate_session(const World& world, const WorldConfig& config,
                            int session_index);

// `landmark_id,persistent,last_session` CSV; persistent landmarks carry
// last_session = n_sessions - 1.
void save_ground_truth(const World& world, const WorldConfig& config,
                       const std::filesystem::path& path);

struct GroundTruthEntry {
  bool persistent = false;
  int last_session = 0;
};
std::map<std::int64_t, GroundTruthEntry> load_ground_truth(
    const std::filesystem::path& path);

}  // namespace mapmaint
