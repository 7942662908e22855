#include "mapmaint/types.hpp"

#include <algorithm>

namespace mapmaint {

std::string to_string(FeatureClass c) {
  return c == FeatureClass::pole ? "pole" : "corner";
}

FeatureClass feature_class_from_string(const std::string& s) {
  if (s == "pole") return FeatureClass::pole;
  if (s == "corner") return FeatureClass::corner;
  throw ParseError("unknown feature class '" + s + "'");
}

void SessionLog::validate() const {
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (!(poses[i].t > poses[i - 1].t)) {
      throw ValidationError("session " + std::to_string(session_id) +
                            ": pose timestamps not strictly increasing at index " +
                            std::to_string(i));
    }
  }
  for (const auto& ev : events) {
    if (ev.pose_index >= poses.size()) {
      throw ValidationError("session " + std::to_string(session_id) +
                            ": event references pose_index " +
                            std::to_string(ev.pose_index) + " but session has " +
                            std::to_string(poses.size()) + " poses");
    }
    if (!(ev.range >= 0.0) || !std::isfinite(ev.range)) {
      throw ValidationError("session " + std::to_string(session_id) +
                            ": negative or non-finite range for landmark " +
                            std::to_string(ev.landmark_id));
    }
  }
}

FeatureMap::FeatureMap(std::vector<Landmark> landmarks, std::string frame_name)
    : landmarks_(std::move(landmarks)), frame_name_(std::move(frame_name)) {
  std::sort(landmarks_.begin(), landmarks_.end(),
            [](const Landmark& a, const Landmark& b) { return a.id < b.id; });
  index_.reserve(landmarks_.size());
  for (std::size_t i = 0; i < landmarks_.size(); ++i) {
    const Landmark& lm = landmarks_[i];
    if (!std::isfinite(lm.x) || !std::isfinite(lm.y)) {
      throw ValidationError("landmark " + std::to_string(lm.id) +
                            " has non-finite coordinates");
    }
    if (!index_.emplace(lm.id, i).second) {
      throw ValidationError("duplicate landmark id " + std::to_string(lm.id));
    }
  }
}

std::size_t FeatureMap::index_of(std::int64_t id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw ValidationError("landmark id " + std::to_string(id) + " not in map");
  }
  return it->second;
}

double landmark_frame_angle(const VehiclePose& pose, const Landmark& lm) {
  const double dx = pose.x - lm.x;
  const double dy = pose.y - lm.y;
  if (dx == 0.0 && dy == 0.0) {
    throw DegenerateGeometryError("vehicle coincides with landmark " +
                                  std::to_string(lm.id));
  }
  return normalize_angle_2pi(std::atan2(dy, dx));
}

}  // namespace mapmaint
