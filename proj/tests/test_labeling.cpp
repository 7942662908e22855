#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "mapmaint/labeling.hpp"
#include "mapmaint/simulator.hpp"
#include "test_util.hpp"

using namespace mapmaint;
using namespace mapmaint::testing;

namespace {

// n landmarks; counts[s][i] = detections of landmark i in session s.
std::pair<FeatureMap, std::vector<SessionLog>> counted_sessions(
    const std::vector<std::vector<int>>& counts) {
  const std::size_t n = counts.front().size();
  std::vector<Landmark> lms;
  for (std::size_t i = 0; i < n; ++i) {
    lms.push_back(make_landmark(static_cast<std::int64_t>(i + 1),
                                5.0 * static_cast<double>(i), 0.0));
  }
  FeatureMap map(lms, "m");
  std::vector<SessionLog> sessions;
  for (std::size_t s = 0; s < counts.size(); ++s) {
    SessionLog log;
    log.session_id = static_cast<int>(s);
    log.poses = {make_pose(0, 0, 10)};
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 0; k < counts[s][i]; ++k) {
        log.events.push_back(make_event(0, static_cast<std::int64_t>(i + 1), 10.0));
      }
    }
    sessions.push_back(std::move(log));
  }
  return {std::move(map), std::move(sessions)};
}

}  // namespace

TEST_CASE("label edge values") {
  // Landmark 1: never matched. Landmark 2: matched everywhere, max frequency.
  auto [map, sessions] = counted_sessions({{0, 4, 1}, {0, 4, 1}, {0, 4, 2}});
  const Eigen::VectorXd labels = empirical_probability(map, sessions);
  CHECK(labels(0) == 0.0);
  CHECK(labels(1) == doctest::Approx(1.0));
  CHECK(labels(2) > 0.0);
  CHECK(labels(2) < 1.0);
}

TEST_CASE("stated formula on the three-session example") {
  // Landmark 2 holds the max frequency and appears in all 3 sessions;
  // landmark 1 has half that frequency and appears in 2 of 3, so its label
  // is 0.5 * (2/3).
  auto [map, sessions] = counted_sessions({{3, 4}, {3, 4}, {0, 4}});
  const Eigen::VectorXd labels = empirical_probability(map, sessions);
  CHECK(labels(1) == doctest::Approx(1.0));
  CHECK(labels(0) == doctest::Approx(0.5 * (2.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("error contracts") {
  auto [map, sessions] = counted_sessions({{1, 1}});
  CHECK_THROWS_AS(empirical_probability(map, sessions), ValidationError);

  auto [map2, empty_sessions] = counted_sessions({{0, 0}, {0, 0}});
  CHECK_THROWS_AS(empirical_probability(map2, empty_sessions), ValidationError);
}

TEST_CASE("label is zero iff never matched") {
  WorldConfig config;
  config.n_persistent = 20;
  config.n_ephemeral = 10;
  config.n_sessions = 5;
  config.loop_length = 200;
  config.area_width = 120;
  config.area_height = 80;
  config.detection_prob = 0.5;
  config.seed = 77;
  World world = generate_world(config);
  std::vector<SessionLog> sessions;
  for (int i = 0; i < config.n_sessions; ++i) {
    sessions.push_back(simulate_session(world, config, i));
  }
  std::vector<std::int64_t> matched;
  for (const auto& s : sessions) {
    for (const auto& e : s.events) matched.push_back(e.landmark_id);
  }
  const Eigen::VectorXd labels = empirical_probability(world.map, sessions);
  for (std::size_t i = 0; i < world.map.size(); ++i) {
    const bool seen = std::find(matched.begin(), matched.end(),
                                world.map.at(i).id) != matched.end();
    CHECK((labels(static_cast<Eigen::Index>(i)) > 0.0) == seen);
  }
}

TEST_CASE("uniform extra session preserves ordering when all are always matched") {
  // Premise: every landmark matched in every session. A new session whose
  // per-landmark counts are proportional to the historical ones leaves the
  // frequencies, and hence the ordering, unchanged.
  std::vector<std::vector<int>> counts = {{6, 3, 9, 12}, {6, 3, 9, 12}};
  auto [map, sessions] = counted_sessions(counts);
  const Eigen::VectorXd before = empirical_probability(map, sessions);

  auto [map2, sessions3] = counted_sessions({{6, 3, 9, 12}, {6, 3, 9, 12}, {2, 1, 3, 4}});
  const Eigen::VectorXd after = empirical_probability(map2, sessions3);

  for (Eigen::Index a = 0; a < before.size(); ++a) {
    for (Eigen::Index b = 0; b < before.size(); ++b) {
      if (before(a) < before(b)) CHECK(after(a) < after(b));
      if (before(a) == before(b)) CHECK(after(a) == after(b));
    }
  }
}

TEST_CASE("labels survive the CSV round trip") {
  TempDir dir("labels");
  auto [map, sessions] = counted_sessions({{2, 5, 1}, {1, 5, 0}});
  const Eigen::VectorXd labels = empirical_probability(map, sessions);
  std::vector<std::int64_t> ids = {1, 2, 3};
  const auto path = dir.path() / "labels.csv";
  save_labels(ids, labels, path);
  auto [ids2, labels2] = load_labels(path);
  CHECK(ids2 == ids);
  CHECK(labels2 == labels);
}
