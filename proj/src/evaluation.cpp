#include "mapmaint/evaluation.hpp"

#include <algorithm>
#include <cassert>
#include <fstream>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "mapmaint/io.hpp"
#include "mapmaint/parallel.hpp"
#include "mapmaint/rng.hpp"
#include "mapmaint/selection.hpp"

namespace mapmaint {

namespace {

constexpr double kMeasurementVarianceFloor = 1e-12;

Eigen::Matrix3d symmetrized(const Eigen::Matrix3d& P) {
  return 0.5 * (P + P.transpose());
}

#ifndef NDEBUG
bool is_positive_definite(const Eigen::Matrix3d& P) {
  return Eigen::LLT<Eigen::Matrix3d>(P).info() == Eigen::Success;
}
#endif

}  // namespace

EkfRun ekf_localize(const FeatureMap& map, const SessionLog& session,
                    const MotionNoise& motion, const SensorNoise& sensor,
                    std::uint64_t seed) {
  if (map.empty()) throw ValidationError("cannot localize against an empty map");
  if (session.poses.empty()) {
    throw ValidationError("session " + std::to_string(session.session_id) +
                          " has no poses");
  }

  // Events grouped by pose for sequential updates.
  std::vector<std::vector<const DetectionEvent*>> events_at(session.poses.size());
  for (const DetectionEvent& ev : session.events) {
    events_at.at(ev.pose_index).push_back(&ev);
  }

  std::mt19937_64 gen(splitmix64(seed));
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
  R(0, 0) = sensor.sigma_range * sensor.sigma_range + kMeasurementVarianceFloor;
  R(1, 1) = sensor.sigma_bearing * sensor.sigma_bearing + kMeasurementVarianceFloor;

  const Eigen::Matrix3d Q =
      Eigen::Vector3d(motion.sigma_v * motion.sigma_v, motion.sigma_v * motion.sigma_v,
                      motion.sigma_omega * motion.sigma_omega)
          .asDiagonal();

  EkfRun run;
  run.states.reserve(session.poses.size());
  run.total_events = session.events.size();

  Eigen::Vector3d x(session.poses[0].x, session.poses[0].y, session.poses[0].heading);
  Eigen::Matrix3d P = Eigen::Vector3d(0.01, 0.01, 1.2e-3).asDiagonal();

  std::size_t associated = 0;

  for (std::size_t k = 0; k < session.poses.size(); ++k) {
    if (k > 0) {
      // True relative motion in the previous pose's frame, plus noise.
      const VehiclePose& prev = session.poses[k - 1];
      const VehiclePose& cur = session.poses[k];
      const double c0 = std::cos(prev.heading);
      const double s0 = std::sin(prev.heading);
      const double dxw = cur.x - prev.x;
      const double dyw = cur.y - prev.y;
      const double fwd = c0 * dxw + s0 * dyw + motion.sigma_v * gauss(gen);
      const double lat = -s0 * dxw + c0 * dyw + motion.sigma_v * gauss(gen);
      const double dth =
          wrap_angle(cur.heading - prev.heading) + motion.sigma_omega * gauss(gen);

      const double c = std::cos(x(2));
      const double s = std::sin(x(2));
      Eigen::Matrix3d F = Eigen::Matrix3d::Identity();
      F(0, 2) = -s * fwd - c * lat;
      F(1, 2) = c * fwd - s * lat;
      Eigen::Matrix3d G = Eigen::Matrix3d::Identity();
      G(0, 0) = c;
      G(0, 1) = -s;
      G(1, 0) = s;
      G(1, 1) = c;

      x(0) += c * fwd - s * lat;
      x(1) += s * fwd + c * lat;
      x(2) = wrap_angle(x(2) + dth);
      P = symmetrized(F * P * F.transpose() + G * Q * G.transpose());
    }

    for (const DetectionEvent* ev : events_at[k]) {
      // Coarse range prefilter, widened by the position uncertainty.
      const double slack = 5.0 + 3.0 * std::sqrt(std::max(0.0, P(0, 0) + P(1, 1)));

      double best_d2 = kAssociationGate;
      double second_d2 = std::numeric_limits<double>::infinity();
      bool found = false;
      Eigen::Vector2d best_innovation = Eigen::Vector2d::Zero();
      Eigen::Matrix2d best_S = Eigen::Matrix2d::Zero();
      Eigen::Matrix<double, 2, 3> best_H = Eigen::Matrix<double, 2, 3>::Zero();

      for (const Landmark& lm : map.landmarks()) {
        const double dx = lm.x - x(0);
        const double dy = lm.y - x(1);
        const double q = dx * dx + dy * dy;
        if (q == 0.0) continue;
        const double r_pred = std::sqrt(q);
        if (std::abs(r_pred - ev->range) > slack) continue;

        Eigen::Matrix<double, 2, 3> H;
        H << -dx / r_pred, -dy / r_pred, 0.0,
             dy / q, -dx / q, -1.0;
        const Eigen::Matrix2d S = H * P * H.transpose() + R;
        Eigen::Vector2d innovation(ev->range - r_pred,
                                   wrap_angle(ev->bearing_vehicle -
                                              wrap_angle(std::atan2(dy, dx) - x(2))));
        const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
        if (!(det > 0.0)) continue;
        const double d2 = (innovation(0) * (S(1, 1) * innovation(0) - S(0, 1) * innovation(1)) +
                           innovation(1) * (S(0, 0) * innovation(1) - S(1, 0) * innovation(0))) /
                          det;
        if (d2 <= best_d2) {
          second_d2 = best_d2;
          best_d2 = d2;
          found = true;
          best_innovation = innovation;
          best_S = S;
          best_H = H;
        } else if (d2 < second_d2) {
          second_d2 = d2;
        }
      }

      if (!found) continue;  // unassociated detections are discarded
      // Two gate-passing candidates at similar Mahalanobis distance risk
      // locking the filter onto the wrong landmark after a coverage gap;
      // discard such ambiguous detections.
      if (second_d2 <= kAssociationGate &&
          second_d2 - best_d2 < kAmbiguityMarginD2) {
        continue;
      }
      ++associated;

      const Eigen::Matrix<double, 3, 2> K = P * best_H.transpose() * best_S.inverse();
      x += K * best_innovation;
      x(2) = wrap_angle(x(2));
      const Eigen::Matrix3d IKH = Eigen::Matrix3d::Identity() - K * best_H;
      P = symmetrized(IKH * P * IKH.transpose() + K * R * K.transpose());
    }

    assert(is_positive_definite(P));
    if (P(0, 0) + P(1, 1) > kFailureTraceM2) run.failed = true;
    run.states.push_back({x, P});
  }

  run.associated_fraction =
      run.total_events == 0
          ? 0.0
          : static_cast<double>(associated) / static_cast<double>(run.total_events);
  if (run.associated_fraction < kMinAssociatedFraction) run.failed = true;
  return run;
}

double max_cov_magnitude(const std::vector<EkfState>& states) {
  if (states.empty()) throw ValidationError("no filter states");
  double worst = 0.0;
  for (const EkfState& st : states) {
    const double a = st.covariance(0, 0);
    const double b = st.covariance(0, 1);
    const double c = st.covariance(1, 1);
    const double mid = 0.5 * (a + c);
    const double rad = std::sqrt(0.25 * (a - c) * (a - c) + b * b);
    worst = std::max(worst, mid + rad);
  }
  return worst;
}

std::pair<EvalCurve, EvalCurve> drop_curve(const FeatureMap& map,
                                           const std::vector<double>& scores,
                                           const std::vector<double>& baseline_keys,
                                           const std::vector<SessionLog>& eval_sessions,
                                           std::vector<double> drop_rates,
                                           const MotionNoise& motion,
                                           const SensorNoise& sensor,
                                           std::uint64_t seed, unsigned threads) {
  if (eval_sessions.empty()) throw ValidationError("no evaluation sessions");
  std::sort(drop_rates.begin(), drop_rates.end());
  drop_rates.erase(std::unique(drop_rates.begin(), drop_rates.end()),
                   drop_rates.end());

  const std::size_t n_rates = drop_rates.size();
  const std::size_t n_sessions = eval_sessions.size();
  struct Cell {
    double max_cov = 0.0;
    bool failed = false;
  };
  // Flat index: ((rate * 2) + strategy) * n_sessions + session.
  std::vector<Cell> cells(n_rates * 2 * n_sessions);

  std::vector<FeatureMap> maps(n_rates * 2);
  for (std::size_t r = 0; r < n_rates; ++r) {
    maps[r * 2 + 0] = rank_subset(map, scores, drop_rates[r]);
    maps[r * 2 + 1] = rank_subset(map, baseline_keys, drop_rates[r]);
  }

  parallel_for(cells.size(), threads, [&](std::size_t idx) {
    const std::size_t s = idx % n_sessions;
    const std::size_t strategy = (idx / n_sessions) % 2;
    const std::size_t r = idx / (2 * n_sessions);
    const SessionLog& session = eval_sessions[s];
    const std::uint64_t session_seed =
        derive_seed(seed, static_cast<std::uint64_t>(session.session_id));
    const EkfRun run = ekf_localize(maps[r * 2 + strategy], session, motion,
                                    sensor, session_seed);
    cells[idx] = {max_cov_magnitude(run.states), run.failed};
  });

  EvalCurve score_curve{"score", {}};
  EvalCurve baseline_curve{"track_length", {}};
  for (std::size_t r = 0; r < n_rates; ++r) {
    for (std::size_t strategy = 0; strategy < 2; ++strategy) {
      EvalPoint point;
      point.drop_rate = drop_rates[r];
      double sum = 0.0;
      for (std::size_t s = 0; s < n_sessions; ++s) {
        const Cell& cell = cells[(r * 2 + strategy) * n_sessions + s];
        sum += cell.max_cov;
        point.failed = point.failed || cell.failed;
      }
      point.max_cov = sum / static_cast<double>(n_sessions);
      (strategy == 0 ? score_curve : baseline_curve).points.push_back(point);
    }
  }
  return {std::move(score_curve), std::move(baseline_curve)};
}

void save_curves(const EvalCurve& score_curve, const EvalCurve& baseline_curve,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "strategy,drop_rate,max_cov,failed\n";
  for (const EvalCurve* curve : {&score_curve, &baseline_curve}) {
    for (const EvalPoint& p : curve->points) {
      out << curve->strategy << ',' << format_double(p.drop_rate) << ','
          << format_double(p.max_cov) << ',' << (p.failed ? 1 : 0) << '\n';
    }
  }
}

}  // namespace mapmaint
