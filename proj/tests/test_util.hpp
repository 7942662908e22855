#pragma once

// Shared helpers for the test binaries.

#include <filesystem>
#include <random>
#include <string>

#include "mapmaint/types.hpp"

namespace mapmaint::testing {

// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("mapmaint_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline Landmark make_landmark(std::int64_t id, double x, double y,
                              FeatureClass cls = FeatureClass::pole) {
  Landmark lm;
  lm.id = id;
  lm.x = x;
  lm.y = y;
  lm.cls = cls;
  return lm;
}

inline VehiclePose make_pose(double t, double x, double y, double heading = 0.0) {
  VehiclePose p;
  p.t = t;
  p.x = x;
  p.y = y;
  p.heading = heading;
  return p;
}

inline DetectionEvent make_event(std::size_t pose_index, std::int64_t landmark_id,
                                 double range, double bearing = 0.0) {
  DetectionEvent e;
  e.pose_index = pose_index;
  e.landmark_id = landmark_id;
  e.range = range;
  e.bearing_vehicle = bearing;
  return e;
}

}  // namespace mapmaint::testing
