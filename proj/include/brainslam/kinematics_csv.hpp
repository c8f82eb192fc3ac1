#pragma once

// Shared CSV schema for trajectories and decodings:
//   t_ms,x_cm,y_cm,speed_cm_s,direction_deg

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "brainslam/common.hpp"
#include "brainslam/text_io.hpp"

namespace brainslam {

inline constexpr std::string_view kKinematicsHeader = "t_ms,x_cm,y_cm,speed_cm_s,direction_deg";

template <class Row>
void write_kinematics_csv(std::ostream& out, std::span<const Row> rows) {
  out << kKinematicsHeader << '\n';
  for (const Row& r : rows) {
    out << r.t_ms << ',' << format_double(r.position.x) << ',' << format_double(r.position.y)
        << ',' << format_double(r.speed_cm_s) << ',' << format_double(r.direction_deg) << '\n';
  }
}

template <class Row>
void write_kinematics_csv(const std::filesystem::path& path, std::span<const Row> rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  write_kinematics_csv(out, rows);
}

/// Parses rows in file order. An empty file yields no rows. Rejects malformed
/// rows, non-increasing timestamps, negative speed and directions outside
/// [0, 360), naming the line.
template <class Row>
std::vector<Row> read_kinematics_csv(std::istream& in) {
  std::vector<Row> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty()) continue;
    if (!header_seen) {
      if (content != kKinematicsHeader) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" +
                         std::string(kKinematicsHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto fields = split_csv(content);
    if (fields.size() != 5) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                       std::to_string(fields.size()));
    }
    Row r{};
    r.t_ms = parse_int64(fields[0], line_no);
    r.position = {parse_double(fields[1], line_no), parse_double(fields[2], line_no)};
    r.speed_cm_s = parse_double(fields[3], line_no);
    r.direction_deg = parse_double(fields[4], line_no);
    if (!std::isfinite(r.position.x) || !std::isfinite(r.position.y)) {
      throw ParseError("line " + std::to_string(line_no) + ": non-finite position");
    }
    if (!(r.speed_cm_s >= 0.0) || !std::isfinite(r.speed_cm_s)) {
      throw ParseError("line " + std::to_string(line_no) + ": speed must be >= 0");
    }
    if (!(r.direction_deg >= 0.0 && r.direction_deg < 360.0)) {
      throw ParseError("line " + std::to_string(line_no) + ": direction must be in [0, 360)");
    }
    if (!rows.empty() && r.t_ms <= rows.back().t_ms) {
      throw ParseError("line " + std::to_string(line_no) + ": timestamps must strictly increase");
    }
    rows.push_back(r);
  }
  return rows;
}

template <class Row>
std::vector<Row> read_kinematics_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_kinematics_csv<Row>(in);
}

}  // namespace brainslam
