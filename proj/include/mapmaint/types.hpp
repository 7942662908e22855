#pragma once

// Shared domain types and coordinate conventions for feature maps and
// multi-session drive logs. Angles are radians everywhere; the 1-degree
// discretization used by the predictor statistics lives in predictors.hpp.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace mapmaint {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateGeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class FeatureClass { pole, corner };

std::string to_string(FeatureClass c);
FeatureClass feature_class_from_string(const std::string& s);

struct Landmark {
  std::int64_t id = 0;
  double x = 0.0;  // metres, map global frame
  double y = 0.0;
  FeatureClass cls = FeatureClass::pole;
  // Ground truth, present only in simulator-generated maps. Scoring code
  // never reads this; it exists for the simulator and for evaluation against
  // the planted truth.
  std::optional<bool> persistent;
};

struct VehiclePose {
  double t = 0.0;  // seconds, strictly increasing within a session
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;  // radians in (-pi, pi]
};

struct DetectionEvent {
  std::size_t pose_index = 0;   // index into the session's pose list
  std::int64_t landmark_id = 0;
  double range = 0.0;           // metres, as measured
  double bearing_vehicle = 0.0; // radians, landmark angle in the vehicle frame
};

struct SessionLog {
  int session_id = 0;
  std::vector<VehiclePose> poses;
  std::vector<DetectionEvent> events;

  // Throws ValidationError on out-of-range pose_index or non-monotone pose
  // timestamps.
  void validate() const;
};

// Landmarks are kept sorted by id; all per-landmark vectors elsewhere in the
// toolkit (predictor rows, labels, scores) align to this order.
class FeatureMap {
 public:
  FeatureMap() = default;
  FeatureMap(std::vector<Landmark> landmarks, std::string frame_name);

  const std::vector<Landmark>& landmarks() const { return landmarks_; }
  const std::string& frame_name() const { return frame_name_; }
  std::size_t size() const { return landmarks_.size(); }
  bool empty() const { return landmarks_.empty(); }

  bool contains(std::int64_t id) const { return index_.count(id) > 0; }
  // Row index of the landmark with this id; throws ValidationError if absent.
  std::size_t index_of(std::int64_t id) const;
  const Landmark& at(std::size_t index) const { return landmarks_.at(index); }

 private:
  std::vector<Landmark> landmarks_;
  std::string frame_name_;
  std::unordered_map<std::int64_t, std::size_t> index_;
};

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * M_PI);
  if (a <= -M_PI) a += 2.0 * M_PI;
  return a;
}

// Wrap to [0, 2*pi).
inline double normalize_angle_2pi(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  if (a >= 2.0 * M_PI) a = 0.0;
  return a;
}

inline double distance(const VehiclePose& pose, const Landmark& lm) {
  const double dx = pose.x - lm.x;
  const double dy = pose.y - lm.y;
  return std::sqrt(dx * dx + dy * dy);
}

// Angle of the vehicle as seen from the landmark's own frame, in [0, 2*pi).
// Throws DegenerateGeometryError when the two positions coincide.
double landmark_frame_angle(const VehiclePose& pose, const Landmark& lm);

}  // namespace mapmaint
