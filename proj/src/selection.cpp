#include "mapmaint/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "mapmaint/io.hpp"

namespace mapmaint {

namespace {

double sample_sd(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (n - 1.0));
}

// Linear-interpolation quantile of a sorted vector, q in [0,1].
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

KdeResult kde(const std::vector<double>& scores, std::optional<double> bandwidth) {
  if (scores.size() < 2) {
    throw ValidationError("kernel density needs at least 2 scores");
  }
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) {
    throw ValidationError("all scores identical; no density to estimate");
  }

  double h = 0.0;
  if (bandwidth.has_value()) {
    if (!(*bandwidth > 0.0)) throw ValidationError("bandwidth must be > 0");
    h = *bandwidth;
  } else {
    const double sd = sample_sd(scores);
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    h = 0.9 * spread * std::pow(static_cast<double>(scores.size()), -0.2);
  }

  KdeResult result;
  result.bandwidth = h;
  const double lo = sorted.front() - 3.0 * h;
  const double hi = sorted.back() + 3.0 * h;
  const double step = (hi - lo) / static_cast<double>(kKdeGridSize - 1);
  result.grid.resize(kKdeGridSize);
  result.density.resize(kKdeGridSize);
  const double norm =
      1.0 / (static_cast<double>(scores.size()) * h * std::sqrt(2.0 * M_PI));
  for (int i = 0; i < kKdeGridSize; ++i) {
    const double g = lo + step * static_cast<double>(i);
    double sum = 0.0;
    for (double x : scores) {
      const double u = (g - x) / h;
      sum += std::exp(-0.5 * u * u);
    }
    result.grid[static_cast<std::size_t>(i)] = g;
    result.density[static_cast<std::size_t>(i)] = norm * sum;
  }
  return result;
}

ThresholdReport find_threshold(const std::vector<double>& scores) {
  ThresholdReport report;
  const KdeResult density = kde(scores);
  report.grid = density.grid;
  report.density = density.density;
  report.bandwidth = density.bandwidth;
  report.sigma = sample_sd(scores);

  const auto& d = density.density;
  std::vector<std::size_t> modes;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool rises = (i == 0) || d[i] > d[i - 1];
    const bool falls = (i + 1 == d.size()) || d[i] >= d[i + 1];
    if (rises && falls) modes.push_back(i);
  }

  if (modes.size() < 2) {
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    report.unimodal_fallback = true;
    const double mode =
        modes.empty() ? sorted[sorted.size() / 2] : density.grid[modes.front()];
    report.peak_low = mode;
    report.peak_high = mode;
    report.local_min = std::numeric_limits<double>::quiet_NaN();
    report.threshold = quantile_sorted(sorted, 0.20);
    return report;
  }

  const std::size_t lo = modes.front();
  const std::size_t hi = modes.back();
  report.peak_low = density.grid[lo];
  report.peak_high = density.grid[hi];
  std::size_t min_idx = lo + 1;
  for (std::size_t i = lo + 1; i < hi; ++i) {
    if (d[i] < d[min_idx]) min_idx = i;
  }
  report.local_min = density.grid[min_idx];
  report.threshold = report.local_min - 0.5 * report.sigma;
  return report;
}

void save_threshold_report(const ThresholdReport& report,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "# score threshold report\n";
  out << "bandwidth " << format_double(report.bandwidth) << '\n';
  out << "sigma " << format_double(report.sigma) << '\n';
  out << "peak_low " << format_double(report.peak_low) << '\n';
  out << "peak_high " << format_double(report.peak_high) << '\n';
  out << "local_min " << format_double(report.local_min) << '\n';
  out << "threshold " << format_double(report.threshold) << '\n';
  out << "unimodal_fallback " << (report.unimodal_fallback ? 1 : 0) << '\n';
}

std::pair<FeatureMap, FeatureMap> prune_map(const FeatureMap& map,
                                            const std::vector<double>& scores,
                                            double threshold) {
  if (scores.size() != map.size()) {
    throw ValidationError("score count does not match map size");
  }
  std::vector<Landmark> kept, discarded;
  for (std::size_t i = 0; i < map.size(); ++i) {
    (scores[i] >= threshold ? kept : discarded).push_back(map.at(i));
  }
  return {FeatureMap(std::move(kept), map.frame_name()),
          FeatureMap(std::move(discarded), map.frame_name())};
}

FeatureMap rank_subset(const FeatureMap& map, const std::vector<double>& ranking,
                       double drop_rate) {
  if (ranking.size() != map.size()) {
    throw ValidationError("ranking key count does not match map size");
  }
  if (!(drop_rate >= 0.0) || drop_rate >= 1.0) {
    throw ValidationError("drop rate must be in [0, 1)");
  }
  std::vector<std::size_t> order(map.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (ranking[a] != ranking[b]) return ranking[a] < ranking[b];
    return map.at(a).id < map.at(b).id;
  });
  // The epsilon guards against 0.35*300 = 104.999... style rounding.
  const auto n_drop = static_cast<std::size_t>(
      std::floor(drop_rate * static_cast<double>(map.size()) + 1e-9));
  std::vector<Landmark> kept;
  kept.reserve(map.size() - n_drop);
  for (std::size_t i = n_drop; i < order.size(); ++i) kept.push_back(map.at(order[i]));
  return FeatureMap(std::move(kept), map.frame_name());
}

}  // namespace mapmaint
