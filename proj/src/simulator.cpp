#include "mapmaint/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "mapmaint/io.hpp"
#include "mapmaint/rng.hpp"

namespace mapmaint {

namespace {

constexpr double kMinSeparationM = 0.5;
constexpr double kMaxCornerRadiusM = 15.0;
// Route width ratio; the loop bounding box is (2H x H) plus rounded corners.
constexpr std::uint64_t kWorldStream = 0x01;
constexpr std::uint64_t kTrajectoryStream = 0x02;
constexpr std::uint64_t kDetectionStream = 0x03;

struct LoopGeometry {
  double half_w = 0.0;  // straight half-extent in x
  double half_h = 0.0;  // straight half-extent in y
  double radius = 0.0;
  double length = 0.0;

  explicit LoopGeometry(double loop_length) {
    radius = std::min(kMaxCornerRadiusM, loop_length / 24.0);
    // Perimeter of a 2:1 rounded rectangle: 6H - 8r + 2*pi*r.
    const double h = (loop_length + (8.0 - 2.0 * M_PI) * radius) / 6.0;
    const double w = 2.0 * h;
    half_w = 0.5 * w - radius;  // half-length of the horizontal straights
    half_h = 0.5 * h - radius;
    if (half_w <= 0.0 || half_h <= 0.0) {
      throw ValidationError("loop_length too short for the track shape");
    }
    length = 4.0 * half_w + 4.0 * half_h + 2.0 * M_PI * radius;
  }

  // Position, tangent heading and left normal at arc length s (counter-
  // clockwise, starting mid bottom straight).
  void at(double s, double& x, double& y, double& heading) const {
    s = std::fmod(s, length);
    if (s < 0.0) s += length;
    const double quarter = 0.5 * M_PI * radius;

    double remaining = s;
    // Bottom straight, second half: from (0, -H/2) towards +x.
    const double y_bot = -(half_h + radius);
    const double y_top = half_h + radius;
    if (remaining < half_w) {
      x = remaining;
      y = y_bot;
      heading = 0.0;
      return;
    }
    remaining -= half_w;
    if (remaining < quarter) {  // bottom-right corner
      const double a = -0.5 * M_PI + remaining / radius;
      x = half_w + radius * std::cos(a);
      y = -half_h + radius * std::sin(a);
      heading = a + 0.5 * M_PI;
      return;
    }
    remaining -= quarter;
    if (remaining < 2.0 * half_h) {  // right straight
      x = half_w + radius;
      y = -half_h + remaining;
      heading = 0.5 * M_PI;
      return;
    }
    remaining -= 2.0 * half_h;
    if (remaining < quarter) {  // top-right corner
      const double a = remaining / radius;
      x = half_w + radius * std::cos(a);
      y = half_h + radius * std::sin(a);
      heading = a + 0.5 * M_PI;
      return;
    }
    remaining -= quarter;
    if (remaining < 2.0 * half_w) {  // top straight
      x = half_w - remaining;
      y = y_top;
      heading = M_PI;
      return;
    }
    remaining -= 2.0 * half_w;
    if (remaining < quarter) {  // top-left corner
      const double a = 0.5 * M_PI + remaining / radius;
      x = -half_w + radius * std::cos(a);
      y = half_h + radius * std::sin(a);
      heading = wrap_angle(a + 0.5 * M_PI);
      return;
    }
    remaining -= quarter;
    if (remaining < 2.0 * half_h) {  // left straight
      x = -(half_w + radius);
      y = half_h - remaining;
      heading = -0.5 * M_PI;
      return;
    }
    remaining -= 2.0 * half_h;
    if (remaining < quarter) {  // bottom-left corner
      const double a = M_PI + remaining / radius;
      x = -half_w + radius * std::cos(a);
      y = -half_h + radius * std::sin(a);
      heading = wrap_angle(a + 0.5 * M_PI);
      return;
    }
    remaining -= quarter;
    // Bottom straight, first half: towards x = 0.
    x = -half_w + remaining;
    y = y_bot;
    heading = 0.0;
  }
};

double clamped_gauss(std::mt19937_64& gen, std::normal_distribution<double>& dist,
                     double sigma) {
  return std::clamp(dist(gen) * sigma, -3.0 * sigma, 3.0 * sigma);
}

}  // namespace

void WorldConfig::validate() const {
  if (n_persistent < 0 || n_ephemeral < 0) {
    throw ValidationError("landmark counts must be >= 0");
  }
  if (!(sensor_range > 0.0)) throw ValidationError("sensor_range must be > 0");
  if (detection_prob < 0.0 || detection_prob > 1.0) {
    throw ValidationError("detection_prob must be in [0,1]");
  }
  if (!(loop_length > 0.0)) throw ValidationError("loop_length must be > 0");
  if (!(pose_spacing > 0.0)) throw ValidationError("pose_spacing must be > 0");
  if (trajectory_jitter < 0.0) throw ValidationError("trajectory_jitter must be >= 0");
  if (n_sessions < 1) throw ValidationError("n_sessions must be >= 1");
  if (ephemeral_lifetime < 1) throw ValidationError("ephemeral_lifetime must be >= 1");
  if (!(area_width > 0.0) || !(area_height > 0.0)) {
    throw ValidationError("area must be positive");
  }
  const double needed = static_cast<double>(n_persistent + n_ephemeral) * M_PI *
                        kMinSeparationM * kMinSeparationM;
  if (needed > 0.5 * area_width * area_height) {
    throw ValidationError("area too small for requested landmark counts at " +
                          format_double(kMinSeparationM) + " m separation");
  }
}

World generate_world(const WorldConfig& config) {
  config.validate();
  const LoopGeometry loop(config.loop_length);
  std::mt19937_64 gen(derive_seed(config.seed, kWorldStream));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  const double half_area_w = 0.5 * config.area_width;
  const double half_area_h = 0.5 * config.area_height;

  std::vector<Landmark> landmarks;
  landmarks.reserve(static_cast<std::size_t>(config.n_persistent + config.n_ephemeral));

  auto far_enough = [&](double x, double y) {
    for (const Landmark& lm : landmarks) {
      const double dx = lm.x - x;
      const double dy = lm.y - y;
      if (dx * dx + dy * dy < kMinSeparationM * kMinSeparationM) return false;
    }
    return true;
  };
  auto in_area = [&](double x, double y) {
    return std::abs(x) <= half_area_w && std::abs(y) <= half_area_h;
  };

  // One quadrant is kept ~4x sparser than the rest so the concentration
  // ratio has something to react to. Persistent landmarks are stratified
  // along the track within each quadrant, the way street furniture lines a
  // road, so no stretch is left blind.
  const int target_sparse = static_cast<int>(
      std::lround(static_cast<double>(config.n_persistent) * 0.25 / 3.25));
  const int target_dense_each =
      static_cast<int>((config.n_persistent - target_sparse) / 3);
  int spare = config.n_persistent - target_sparse - 3 * target_dense_each;

  // The loop passes through the quadrants in order; each occupies the same
  // arc length (quarter symmetry of the rounded rectangle).
  const double quadrant_arc = loop.length / 4.0;
  std::int64_t next_id = 1;
  const long max_attempts =
      20000L * static_cast<long>(std::max(1, config.n_persistent + config.n_ephemeral));
  long attempts = 0;

  for (int quadrant = 0; quadrant < 4; ++quadrant) {
    // Quadrant 3 (x<0, y<0) is the sparse one; the loop starts mid bottom
    // straight heading +x, so quadrants come up in the order SE, NE, NW, SW.
    int count = (quadrant == 3) ? target_sparse : target_dense_each;
    if (quadrant < 3 && spare > 0) {
      ++count;
      --spare;
    }
    const double arc_start = static_cast<double>(quadrant) * quadrant_arc;
    const double stratum = quadrant_arc / static_cast<double>(std::max(1, count));
    for (int i = 0; i < count; ++i) {
      while (true) {
        if (++attempts > max_attempts) {
          throw ValidationError("area too small to place the requested landmarks");
        }
        const double s =
            arc_start + (static_cast<double>(i) + uniform(gen)) * stratum;
        const double offset = 2.0 + uniform(gen) * (0.6 * config.sensor_range - 2.0);
        const double side = uniform(gen) < 0.5 ? -1.0 : 1.0;
        double px, py, heading;
        loop.at(s, px, py, heading);
        const double nx = -std::sin(heading);
        const double ny = std::cos(heading);
        const double x = px + side * offset * nx;
        const double y = py + side * offset * ny;
        if (!in_area(x, y) || !far_enough(x, y)) continue;

        Landmark lm;
        lm.id = next_id++;
        lm.x = x;
        lm.y = y;
        lm.cls = uniform(gen) < 0.7 ? FeatureClass::pole : FeatureClass::corner;
        lm.persistent = true;
        landmarks.push_back(lm);
        break;
      }
    }
  }

  std::map<std::int64_t, int> schedule;
  const int last_cap = std::min(config.ephemeral_lifetime, config.n_sessions);
  int placed_ephemeral = 0;
  while (placed_ephemeral < config.n_ephemeral) {
    if (++attempts > max_attempts) {
      throw ValidationError("area too small to place the requested landmarks");
    }
    const double s = uniform(gen) * loop.length;
    const double offset = 1.5 + uniform(gen) * 4.5;  // kerbside band
    const double side = uniform(gen) < 0.5 ? -1.0 : 1.0;
    double px, py, heading;
    loop.at(s, px, py, heading);
    const double nx = -std::sin(heading);
    const double ny = std::cos(heading);
    const double x = px + side * offset * nx;
    const double y = py + side * offset * ny;
    if (!in_area(x, y) || !far_enough(x, y)) continue;

    Landmark lm;
    lm.id = next_id++;
    lm.x = x;
    lm.y = y;
    lm.cls = uniform(gen) < 0.7 ? FeatureClass::corner : FeatureClass::pole;
    lm.persistent = false;
    landmarks.push_back(lm);
    schedule[lm.id] = static_cast<int>(gen() % static_cast<std::uint64_t>(last_cap));
    ++placed_ephemeral;
  }

  World world;
  world.map = FeatureMap(std::move(landmarks), "sim_world");
  world.ephemeral_schedule = std::move(schedule);
  return world;
}

std::vector<VehiclePose> generate_trajectory(const WorldConfig& config,
                                             int session_index) {
  config.validate();
  const LoopGeometry loop(config.loop_length);
  std::mt19937_64 gen(derive_seed(config.seed,
                                  kTrajectoryStream * 0x10000ULL +
                                      static_cast<std::uint64_t>(session_index)));
  std::normal_distribution<double> gauss(0.0, 1.0);

  const auto n_poses = static_cast<std::size_t>(loop.length / config.pose_spacing);
  std::vector<VehiclePose> poses;
  poses.reserve(n_poses);
  for (std::size_t i = 0; i < n_poses; ++i) {
    const double s = static_cast<double>(i) * config.pose_spacing;
    double x, y, heading;
    loop.at(s, x, y, heading);
    const double lateral = config.trajectory_jitter * gauss(gen);
    VehiclePose pose;
    pose.x = x - std::sin(heading) * lateral;
    pose.y = y + std::cos(heading) * lateral;
    pose.heading = wrap_angle(heading);
    pose.t = s;  // nominal 1 m/s drive
    poses.push_back(pose);
  }
  return poses;
}

SessionLog simulate_session(const World& world, const WorldConfig& config,
                            int session_index) {
  config.validate();
  if (session_index < 0 || session_index >= config.n_sessions) {
    throw ValidationError("session index " + std::to_string(session_index) +
                          " outside configured session count");
  }
  SessionLog log;
  log.session_id = session_index;
  log.poses = generate_trajectory(config, session_index);

  std::mt19937_64 gen(derive_seed(config.seed,
                                  kDetectionStream * 0x10000ULL +
                                      static_cast<std::uint64_t>(session_index)));
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  for (std::size_t k = 0; k < log.poses.size(); ++k) {
    const VehiclePose& pose = log.poses[k];
    for (const Landmark& lm : world.map.landmarks()) {
      const bool present =
          (lm.persistent.value_or(true)) ||
          world.ephemeral_schedule.at(lm.id) >= session_index;
      if (!present) continue;
      const double dx = lm.x - pose.x;
      const double dy = lm.y - pose.y;
      const double dist = std::sqrt(dx * dx + dy * dy);
      if (dist > config.sensor_range || dist == 0.0) continue;
      if (uniform(gen) >= config.detection_prob) continue;

      DetectionEvent ev;
      ev.pose_index = k;
      ev.landmark_id = lm.id;
      ev.range = std::max(0.0, dist + clamped_gauss(gen, gauss, kSimRangeNoiseSd));
      ev.bearing_vehicle = wrap_angle(std::atan2(dy, dx) - pose.heading +
                                      clamped_gauss(gen, gauss, kSimBearingNoiseSd));
      log.events.push_back(ev);
    }
  }
  log.validate();
  return log;
}

void save_ground_truth(const World& world, const WorldConfig& config,
                       const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "landmark_id,persistent,last_session\n";
  for (const Landmark& lm : world.map.landmarks()) {
    const bool persistent = lm.persistent.value_or(true);
    const int last = persistent ? config.n_sessions - 1
                                : world.ephemeral_schedule.at(lm.id);
    out << lm.id << ',' << (persistent ? 1 : 0) << ',' << last << '\n';
  }
}

std::map<std::int64_t, GroundTruthEntry> load_ground_truth(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  std::map<std::int64_t, GroundTruthEntry> truth;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw ParseError(path.string() + ": expected landmark_id,persistent,last_session");
    }
    GroundTruthEntry entry;
    entry.persistent = parse_int(fields[1]) != 0;
    entry.last_session = static_cast<int>(parse_int(fields[2]));
    truth[parse_int(fields[0])] = entry;
  }
  return truth;
}

}  // namespace mapmaint
