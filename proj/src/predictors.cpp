#include "mapmaint/predictors.hpp"

#include <algorithm>
#include <fstream>

#include "mapmaint/io.hpp"
#include "mapmaint/parallel.hpp"

namespace mapmaint {

void accumulate(PredictorRecord& record, const VehiclePose& pose,
                const Landmark& landmark, const DetectionEvent& event) {
  if (event.landmark_id != landmark.id) {
    throw ValidationError("event landmark id " + std::to_string(event.landmark_id) +
                          " does not match landmark " + std::to_string(landmark.id));
  }
  const int bin = angle_bin(landmark_frame_angle(pose, landmark));
  record.landmark_id = landmark.id;
  record.n_views += 1;
  record.angle_bins[bin] = true;
  record.max_range_per_bin[bin] =
      std::max(record.max_range_per_bin[bin], distance(pose, landmark));
}

double spanned_angle(const PredictorRecord& record) {
  int count = 0;
  for (bool b : record.angle_bins) count += b ? 1 : 0;
  return static_cast<double>(count);
}

double track_length(const PredictorRecord& record) {
  double sum = 0.0;
  for (double r : record.max_range_per_bin) sum += r;
  return sum * kBinWidthRad;
}

double detection_area(const PredictorRecord& record) {
  double sum = 0.0;
  for (double r : record.max_range_per_bin) sum += r * r;
  return 0.5 * sum * kBinWidthRad;
}

double max_possible_spanned_angle(const Landmark& landmark,
                                  const std::vector<VehiclePose>& all_poses,
                                  double radius) {
  std::array<bool, kAngleBins> bins{};
  for (const VehiclePose& pose : all_poses) {
    const double d = distance(pose, landmark);
    if (d > radius || d == 0.0) continue;
    bins[angle_bin(landmark_frame_angle(pose, landmark))] = true;
  }
  int count = 0;
  for (bool b : bins) count += b ? 1 : 0;
  return static_cast<double>(count);
}

double concentration_ratio(const Landmark& landmark, const FeatureMap& map,
                           double radius) {
  double max_d = 0.0;
  double sum_d = 0.0;
  for (const Landmark& other : map.landmarks()) {
    if (other.id == landmark.id) continue;
    const double dx = other.x - landmark.x;
    const double dy = other.y - landmark.y;
    const double d = std::sqrt(dx * dx + dy * dy);
    if (d > radius) continue;
    max_d = std::max(max_d, d);
    sum_d += d;
  }
  if (sum_d <= 0.0) return 1.0;  // no neighbours: maximally sparse
  return max_d / sum_d;
}

const std::vector<std::string>& predictor_column_names() {
  static const std::vector<std::string> names = {
      "n_views",          "spanned_angle",
      "track_length",     "detection_area",
      "max_possible_spanned_angle", "concentration_ratio",
      "cr_times_views"};
  return names;
}

std::size_t PredictorMatrix::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < column_names.size(); ++i) {
    if (column_names[i] == name) return i;
  }
  throw ValidationError("predictor matrix has no column '" + name + "'");
}

Eigen::VectorXd PredictorMatrix::column(const std::string& name) const {
  return values.col(static_cast<Eigen::Index>(column_index(name)));
}

std::vector<PredictorRecord> build_records(const FeatureMap& map,
                                           const std::vector<SessionLog>& sessions,
                                           double radius, unsigned threads) {
  const std::size_t n = map.size();
  std::vector<PredictorRecord> records(n);

  // Events grouped per landmark, preserving session order, so each landmark
  // can be finalized independently of the others.
  struct EventRef {
    std::size_t session;
    std::size_t event;
  };
  std::vector<std::vector<EventRef>> per_landmark(n);
  for (std::size_t s = 0; s < sessions.size(); ++s) {
    for (std::size_t e = 0; e < sessions[s].events.size(); ++e) {
      const DetectionEvent& ev = sessions[s].events[e];
      if (!map.contains(ev.landmark_id)) {
        throw ValidationError("session " + std::to_string(sessions[s].session_id) +
                              " detects landmark " + std::to_string(ev.landmark_id) +
                              " absent from map");
      }
      per_landmark[map.index_of(ev.landmark_id)].push_back({s, e});
    }
  }

  std::vector<VehiclePose> pooled_poses;
  for (const SessionLog& s : sessions) {
    pooled_poses.insert(pooled_poses.end(), s.poses.begin(), s.poses.end());
  }

  parallel_for(n, threads, [&](std::size_t i) {
    const Landmark& lm = map.at(i);
    PredictorRecord& rec = records[i];
    rec.landmark_id = lm.id;
    for (const EventRef& ref : per_landmark[i]) {
      const SessionLog& session = sessions[ref.session];
      const DetectionEvent& ev = session.events[ref.event];
      accumulate(rec, session.poses.at(ev.pose_index), lm, ev);
    }
    rec.spanned_angle_deg = spanned_angle(rec);
    rec.track_length_m = track_length(rec);
    rec.detection_area_m2 = detection_area(rec);
    rec.max_possible_spanned_angle_deg =
        max_possible_spanned_angle(lm, pooled_poses, radius);
    rec.concentration_ratio = concentration_ratio(lm, map, radius);
    rec.cr_times_views = rec.concentration_ratio * static_cast<double>(rec.n_views);
  });
  return records;
}

PredictorMatrix build_matrix(const FeatureMap& map,
                             const std::vector<SessionLog>& sessions,
                             double radius, unsigned threads) {
  const std::vector<PredictorRecord> records =
      build_records(map, sessions, radius, threads);
  PredictorMatrix matrix;
  matrix.column_names = predictor_column_names();
  matrix.landmark_ids.reserve(records.size());
  matrix.values.resize(static_cast<Eigen::Index>(records.size()),
                       static_cast<Eigen::Index>(matrix.column_names.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PredictorRecord& r = records[i];
    matrix.landmark_ids.push_back(r.landmark_id);
    const auto row = static_cast<Eigen::Index>(i);
    matrix.values(row, 0) = static_cast<double>(r.n_views);
    matrix.values(row, 1) = r.spanned_angle_deg;
    matrix.values(row, 2) = r.track_length_m;
    matrix.values(row, 3) = r.detection_area_m2;
    matrix.values(row, 4) = r.max_possible_spanned_angle_deg;
    matrix.values(row, 5) = r.concentration_ratio;
    matrix.values(row, 6) = r.cr_times_views;
  }
  return matrix;
}

void save_predictor_matrix(const PredictorMatrix& matrix,
                           const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << "landmark_id";
  for (const auto& name : matrix.column_names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < matrix.landmark_ids.size(); ++i) {
    out << matrix.landmark_ids[i];
    for (Eigen::Index j = 0; j < matrix.values.cols(); ++j) {
      out << ',' << format_double(matrix.values(static_cast<Eigen::Index>(i), j));
    }
    out << '\n';
  }
}

PredictorMatrix load_predictor_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  auto header = split_fields(line);
  if (header.empty() || header[0] != "landmark_id") {
    throw ParseError(path.string() + ": first column must be landmark_id");
  }
  PredictorMatrix matrix;
  for (std::size_t i = 1; i < header.size(); ++i) {
    matrix.column_names.emplace_back(header[i]);
  }
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (fields.size() != header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                       ": wrong field count");
    }
    matrix.landmark_ids.push_back(parse_int(fields[0]));
    std::vector<double> row;
    row.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      row.push_back(parse_double(fields[i]));
    }
    rows.push_back(std::move(row));
  }
  matrix.values.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(matrix.column_names.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      matrix.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return matrix;
}

}  // namespace mapmaint
