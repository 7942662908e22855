#pragma once

// Turns scores into keep/prune decisions. The cut point comes from a Gaussian
// kernel density estimate of the score distribution: the local minimum between
// the two extreme modes, lowered by half the score standard deviation so that
// occasionally-occluded features survive.

#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "mapmaint/types.hpp"

namespace mapmaint {

inline constexpr int kKdeGridSize = 512;

struct KdeResult {
  std::vector<double> grid;     // kKdeGridSize points, [min-3h, max+3h]
  std::vector<double> density;
  double bandwidth = 0.0;
};

// Silverman bandwidth 0.9*min(SD, IQR/1.34)*n^(-1/5) unless one is given.
// Requires at least two distinct scores.
KdeResult kde(const std::vector<double>& scores,
              std::optional<double> bandwidth = std::nullopt);

struct ThresholdReport {
  std::vector<double> grid;
  std::vector<double> density;
  double bandwidth = 0.0;
  double peak_low = 0.0;    // score value of the lowest extreme mode
  double peak_high = 0.0;   // score value of the highest extreme mode
  double local_min = 0.0;   // density minimum strictly between the peaks
  double sigma = 0.0;       // sample SD of the scores
  double threshold = 0.0;   // local_min - 0.5*sigma
  // Set when the density has fewer than two modes; the threshold then falls
  // back to the 20th percentile of the scores and local_min is meaningless.
  bool unimodal_fallback = false;
};

ThresholdReport find_threshold(const std::vector<double>& scores);

void save_threshold_report(const ThresholdReport& report,
                           const std::filesystem::path& path);

// Splits the map into (kept, discarded) by score >= threshold. Scores align
// with the map's id order.
std::pair<FeatureMap, FeatureMap> prune_map(const FeatureMap& map,
                                            const std::vector<double>& scores,
                                            double threshold);

// Drops the floor(drop_rate * N) lowest-key landmarks; ties broken by id
// ascending (lower id dropped first).
FeatureMap rank_subset(const FeatureMap& map, const std::vector<double>& ranking,
                       double drop_rate);

}  // namespace mapmaint
