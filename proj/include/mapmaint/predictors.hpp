#pragma once

// Per-landmark detection statistics accumulated across sessions, and the six
// predictor variables derived from them. Detection angles are discretized
// into 360 one-degree bins in the landmark's own frame; per-bin ranges keep
// the maximum distance at which the landmark was ever matched from that
// angle.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mapmaint/types.hpp"

namespace mapmaint {

inline constexpr int kAngleBins = 360;
inline constexpr double kBinWidthRad = M_PI / 180.0;
inline constexpr double kNeighbourRadiusM = 30.0;

// 1-degree bin of an angle in [0, 2*pi); floor with wraparound at 360.
inline int angle_bin(double angle_rad) {
  int bin = static_cast<int>(angle_rad / kBinWidthRad);
  return ((bin % kAngleBins) + kAngleBins) % kAngleBins;
}

struct PredictorRecord {
  std::int64_t landmark_id = 0;
  std::int64_t n_views = 0;
  std::array<bool, kAngleBins> angle_bins{};
  std::array<double, kAngleBins> max_range_per_bin{};  // 0 where never detected

  // Derived predictors, filled by build_records / build_matrix.
  double spanned_angle_deg = 0.0;
  double track_length_m = 0.0;
  double detection_area_m2 = 0.0;
  double max_possible_spanned_angle_deg = 0.0;
  double concentration_ratio = 1.0;
  double cr_times_views = 0.0;
};

// Registers one detection: bumps the view counter, marks the 1-degree bin of
// the landmark-frame angle and keeps the per-bin maximum vehicle distance.
// The range stored in the event is the measured value; the statistics use the
// geometric pose-to-landmark distance.
void accumulate(PredictorRecord& record, const VehiclePose& pose,
                const Landmark& landmark, const DetectionEvent& event);

// Number of marked 1-degree bins, in [0, 360].
double spanned_angle(const PredictorRecord& record);

// Arc length swept at the per-bin maximum ranges: sum_i mR[i] * (pi/180).
double track_length(const PredictorRecord& record);

// Sector area covered at the per-bin maximum ranges:
// 0.5 * sum_i mR[i]^2 * (pi/180).
double detection_area(const PredictorRecord& record);

// Count of distinct 1-degree bins occupied by the landmark-frame angle over
// all poses within `radius` of the landmark. Depends only on the trajectory.
double max_possible_spanned_angle(const Landmark& landmark,
                                  const std::vector<VehiclePose>& all_poses,
                                  double radius = kNeighbourRadiusM);

// max(d) / sum(d) over distances d to the other landmarks within `radius`.
// Near 1 means sparse surroundings; returns 1.0 when no neighbour qualifies.
double concentration_ratio(const Landmark& landmark, const FeatureMap& map,
                           double radius = kNeighbourRadiusM);

struct PredictorMatrix {
  std::vector<std::int64_t> landmark_ids;   // fixed map id order
  std::vector<std::string> column_names;
  Eigen::MatrixXd values;                   // rows align with landmark_ids

  std::size_t column_index(const std::string& name) const;  // throws if absent
  Eigen::VectorXd column(const std::string& name) const;
};

const std::vector<std::string>& predictor_column_names();

// Finalized records for every map landmark (including never-detected ones,
// which keep all-zero dynamic predictors). Throws ValidationError if an event
// references a landmark absent from the map.
std::vector<PredictorRecord> build_records(const FeatureMap& map,
                                           const std::vector<SessionLog>& sessions,
                                           double radius = kNeighbourRadiusM,
                                           unsigned threads = 1);

PredictorMatrix build_matrix(const FeatureMap& map,
                             const std::vector<SessionLog>& sessions,
                             double radius = kNeighbourRadiusM,
                             unsigned threads = 1);

void save_predictor_matrix(const PredictorMatrix& matrix,
                           const std::filesystem::path& path);
PredictorMatrix load_predictor_matrix(const std::filesystem::path& path);

}  // namespace mapmaint
