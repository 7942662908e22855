#pragma once

// Line-oriented text formats.
//
// Map file: one landmark per line, `id,x,y,class[,persistent]`; '#' starts a
// comment line; '.' is the decimal separator regardless of locale.
//
// Session file (`session_<id>.log`): two record kinds,
//   P,t,x,y,heading                 vehicle pose, appended in drive order
//   D,pose_index,landmark_id,range,bearing   detection of a map landmark
//
// Numbers are written with the shortest representation that round-trips, so
// save followed by load reproduces the data model exactly.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mapmaint/types.hpp"

namespace mapmaint {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view s);  // throws ParseError
std::int64_t parse_int(std::string_view s);

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

FeatureMap load_map(const std::filesystem::path& path);
void save_map(const FeatureMap& map, const std::filesystem::path& path);

SessionLog load_session(const std::filesystem::path& path);
// Writes `session_<id>.log` into dir and returns the full path.
std::filesystem::path save_session(const SessionLog& session,
                                   const std::filesystem::path& dir);

// All `session_*.log` files in dir, ordered by session id.
std::vector<SessionLog> load_sessions(const std::filesystem::path& dir);

// Two-column CSV `landmark_id,<value_name>` used for labels and scores.
void save_id_value_csv(const std::vector<std::int64_t>& ids,
                       const std::vector<double>& values,
                       const std::string& value_name,
                       const std::filesystem::path& path);
std::pair<std::vector<std::int64_t>, std::vector<double>> load_id_value_csv(
    const std::filesystem::path& path);

}  // namespace mapmaint
