#include "mapmaint/labeling.hpp"

#include <algorithm>
#include <fstream>

#include "mapmaint/io.hpp"

namespace mapmaint {

Eigen::VectorXd empirical_probability(const FeatureMap& map,
                                      const std::vector<SessionLog>& sessions) {
  if (sessions.size() < 2) {
    throw ValidationError("empirical probability needs at least 2 sessions, got " +
                          std::to_string(sessions.size()));
  }
  const std::size_t n = map.size();
  std::vector<std::int64_t> detections(n, 0);
  std::vector<int> sessions_matched(n, 0);
  std::int64_t total_detections = 0;

  std::vector<bool> seen(n);
  for (const SessionLog& session : sessions) {
    std::fill(seen.begin(), seen.end(), false);
    for (const DetectionEvent& ev : session.events) {
      const std::size_t i = map.index_of(ev.landmark_id);
      detections[i] += 1;
      total_detections += 1;
      seen[i] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i]) sessions_matched[i] += 1;
    }
  }
  if (total_detections == 0) {
    throw ValidationError("no detections in any session; nothing to label");
  }

  Eigen::VectorXd labels(static_cast<Eigen::Index>(n));
  double max_freq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    max_freq = std::max(
        max_freq, static_cast<double>(detections[i]) / static_cast<double>(total_detections));
  }
  const double n_sessions = static_cast<double>(sessions.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double freq =
        static_cast<double>(detections[i]) / static_cast<double>(total_detections);
    const double rescaled = freq / max_freq;
    const double p = static_cast<double>(sessions_matched[i]) / n_sessions;
    labels(static_cast<Eigen::Index>(i)) = std::clamp(rescaled * p, 0.0, 1.0);
  }
  return labels;
}

void save_labels(const std::vector<std::int64_t>& ids, const Eigen::VectorXd& labels,
                 const std::filesystem::path& path) {
  std::vector<double> values(labels.data(), labels.data() + labels.size());
  save_id_value_csv(ids, values, "label", path);
}

std::pair<std::vector<std::int64_t>, Eigen::VectorXd> load_labels(
    const std::filesystem::path& path) {
  auto [ids, values] = load_id_value_csv(path);
  Eigen::VectorXd labels =
      Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return {std::move(ids), std::move(labels)};
}

}  // namespace mapmaint
