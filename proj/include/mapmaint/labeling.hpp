#pragma once

// Empirical re-observation probability, the regression target. A landmark's
// raw detection frequency across all sessions is rescaled by the maximum
// frequency in the map, then damped by the fraction of sessions in which the
// landmark was matched at least once.

#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "mapmaint/types.hpp"

namespace mapmaint {

// One value in [0,1] per map landmark, aligned to map id order. Requires at
// least two sessions and at least one detection overall.
Eigen::VectorXd empirical_probability(const FeatureMap& map,
                                      const std::vector<SessionLog>& sessions);

void save_labels(const std::vector<std::int64_t>& ids, const Eigen::VectorXd& labels,
                 const std::filesystem::path& path);
std::pair<std::vector<std::int64_t>, Eigen::VectorXd> load_labels(
    const std::filesystem::path& path);

}  // namespace mapmaint
