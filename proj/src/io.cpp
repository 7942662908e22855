#include "mapmaint/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mapmaint {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError("bad number '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ParseError("bad integer '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool skippable(std::string_view line) {
  return line.empty() || line.front() == '#';
}

[[noreturn]] void parse_fail(const fs::path& path, std::size_t line_no,
                             const std::string& what) {
  throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::ifstream open_for_read(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::ofstream open_for_write(const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  return out;
}

}  // namespace

FeatureMap load_map(const fs::path& path) {
  std::ifstream in = open_for_read(path);
  std::vector<Landmark> landmarks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (skippable(sv)) continue;
    auto fields = split_fields(sv);
    if (fields.size() != 4 && fields.size() != 5) {
      parse_fail(path, line_no, "expected id,x,y,class[,persistent]");
    }
    Landmark lm;
    try {
      lm.id = parse_int(trim(fields[0]));
      lm.x = parse_double(trim(fields[1]));
      lm.y = parse_double(trim(fields[2]));
      lm.cls = feature_class_from_string(std::string(trim(fields[3])));
      if (fields.size() == 5) {
        const std::int64_t flag = parse_int(trim(fields[4]));
        if (flag != 0 && flag != 1) throw ParseError("persistent flag must be 0 or 1");
        lm.persistent = (flag == 1);
      }
    } catch (const ParseError& e) {
      parse_fail(path, line_no, e.what());
    }
    landmarks.push_back(lm);
  }
  return FeatureMap(std::move(landmarks), path.stem().string());
}

void save_map(const FeatureMap& map, const fs::path& path) {
  std::ofstream out = open_for_write(path);
  out << "# id,x,y,class[,persistent]\n";
  for (const Landmark& lm : map.landmarks()) {
    out << lm.id << ',' << format_double(lm.x) << ',' << format_double(lm.y)
        << ',' << to_string(lm.cls);
    if (lm.persistent.has_value()) out << ',' << (*lm.persistent ? 1 : 0);
    out << '\n';
  }
}

SessionLog load_session(const fs::path& path) {
  const std::string stem = path.stem().string();
  constexpr std::string_view prefix = "session_";
  if (stem.rfind(prefix, 0) != 0) {
    throw ParseError(path.string() + ": session files are named session_<id>.log");
  }
  SessionLog log;
  log.session_id = static_cast<int>(parse_int(stem.substr(prefix.size())));

  std::ifstream in = open_for_read(path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (skippable(sv)) continue;
    auto fields = split_fields(sv);
    try {
      if (fields[0] == "P") {
        if (fields.size() != 5) parse_fail(path, line_no, "expected P,t,x,y,heading");
        VehiclePose pose;
        pose.t = parse_double(trim(fields[1]));
        pose.x = parse_double(trim(fields[2]));
        pose.y = parse_double(trim(fields[3]));
        pose.heading = wrap_angle(parse_double(trim(fields[4])));
        log.poses.push_back(pose);
      } else if (fields[0] == "D") {
        if (fields.size() != 5) {
          parse_fail(path, line_no, "expected D,pose_index,landmark_id,range,bearing");
        }
        DetectionEvent ev;
        const std::int64_t idx = parse_int(trim(fields[1]));
        if (idx < 0) throw ParseError("negative pose_index");
        ev.pose_index = static_cast<std::size_t>(idx);
        ev.landmark_id = parse_int(trim(fields[2]));
        ev.range = parse_double(trim(fields[3]));
        ev.bearing_vehicle = parse_double(trim(fields[4]));
        log.events.push_back(ev);
      } else {
        parse_fail(path, line_no, "unknown record kind '" + std::string(fields[0]) + "'");
      }
    } catch (const ParseError& e) {
      parse_fail(path, line_no, e.what());
    }
  }
  log.validate();
  return log;
}

fs::path save_session(const SessionLog& session, const fs::path& dir) {
  fs::create_directories(dir);
  const fs::path path = dir / ("session_" + std::to_string(session.session_id) + ".log");
  std::ofstream out = open_for_write(path);
  out << "# P,t,x,y,heading | D,pose_index,landmark_id,range,bearing\n";
  for (const VehiclePose& p : session.poses) {
    out << "P," << format_double(p.t) << ',' << format_double(p.x) << ','
        << format_double(p.y) << ',' << format_double(p.heading) << '\n';
  }
  for (const DetectionEvent& e : session.events) {
    out << "D," << e.pose_index << ',' << e.landmark_id << ','
        << format_double(e.range) << ',' << format_double(e.bearing_vehicle) << '\n';
  }
  return path;
}

void save_id_value_csv(const std::vector<std::int64_t>& ids,
                       const std::vector<double>& values,
                       const std::string& value_name, const fs::path& path) {
  if (ids.size() != values.size()) {
    throw ValidationError("id and value lists differ in length");
  }
  std::ofstream out = open_for_write(path);
  out << "landmark_id," << value_name << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i] << ',' << format_double(values[i]) << '\n';
  }
}

std::pair<std::vector<std::int64_t>, std::vector<double>> load_id_value_csv(
    const fs::path& path) {
  std::ifstream in = open_for_read(path);
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || split_fields(trim(line)).size() != 2) {
    throw ParseError(path.string() + ": expected a two-column CSV header");
  }
  ++line_no;
  std::vector<std::int64_t> ids;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = trim(line);
    if (skippable(sv)) continue;
    auto fields = split_fields(sv);
    if (fields.size() != 2) parse_fail(path, line_no, "expected id,value");
    try {
      ids.push_back(parse_int(trim(fields[0])));
      values.push_back(parse_double(trim(fields[1])));
    } catch (const ParseError& e) {
      parse_fail(path, line_no, e.what());
    }
  }
  return {std::move(ids), std::move(values)};
}

std::vector<SessionLog> load_sessions(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ParseError(dir.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("session_", 0) == 0 && entry.path().extension() == ".log") {
      files.push_back(entry.path());
    }
  }
  std::vector<SessionLog> sessions;
  sessions.reserve(files.size());
  for (const auto& f : files) sessions.push_back(load_session(f));
  std::sort(sessions.begin(), sessions.end(),
            [](const SessionLog& a, const SessionLog& b) {
              return a.session_id < b.session_id;
            });
  for (std::size_t i = 1; i < sessions.size(); ++i) {
    if (sessions[i].session_id == sessions[i - 1].session_id) {
      throw ValidationError("duplicate session id " +
                            std::to_string(sessions[i].session_id));
    }
  }
  return sessions;
}

}  // namespace mapmaint
