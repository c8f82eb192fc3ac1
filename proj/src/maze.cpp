#include "brainslam/maze.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>
#include <string>

#include "brainslam/text_io.hpp"

namespace brainslam {

namespace {

constexpr double kEndpointTolerance = 1e-9;
constexpr double kTieTolerance = 1e-12;

bool same_point(Vec2 a, Vec2 b) { return distance(a, b) <= kEndpointTolerance; }

}  // namespace

Vec2 Segment::point_at(double offset_cm) const {
  const double len = length();
  if (len == 0.0) return a;
  const double t = std::clamp(offset_cm / len, 0.0, 1.0);
  return a + t * (b - a);
}

MazeSkeleton::MazeSkeleton(std::vector<Segment> segments, std::vector<Vec2> reward_sites)
    : segments_(std::move(segments)), reward_sites_(std::move(reward_sites)) {
  if (segments_.empty()) throw ValidationError("maze skeleton has no segments");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!std::isfinite(s.a.x) || !std::isfinite(s.a.y) || !std::isfinite(s.b.x) ||
        !std::isfinite(s.b.y)) {
      throw ValidationError("maze segment " + std::to_string(i) + " has non-finite coordinates");
    }
    if (s.length() == 0.0) {
      throw ValidationError("maze segment " + std::to_string(i) + " has zero length");
    }
  }
}

BoundingBox MazeSkeleton::bounding_box() const {
  BoundingBox box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()},
                  {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()}};
  for (const auto& s : segments_) {
    for (Vec2 p : {s.a, s.b}) {
      box.min.x = std::min(box.min.x, p.x);
      box.min.y = std::min(box.min.y, p.y);
      box.max.x = std::max(box.max.x, p.x);
      box.max.y = std::max(box.max.y, p.y);
    }
  }
  return box;
}

double MazeSkeleton::total_length() const {
  return std::accumulate(segments_.begin(), segments_.end(), 0.0,
                         [](double acc, const Segment& s) { return acc + s.length(); });
}

bool MazeSkeleton::all_axis_aligned() const {
  return std::all_of(segments_.begin(), segments_.end(),
                     [](const Segment& s) { return s.axis_aligned(); });
}

bool MazeSkeleton::is_connected() const {
  const std::size_t n = segments_.size();
  auto touches = [&](std::size_t i, std::size_t j) {
    const auto& s = segments_[i];
    const auto& t = segments_[j];
    return same_point(s.a, t.a) || same_point(s.a, t.b) || same_point(s.b, t.a) ||
           same_point(s.b, t.b);
  };
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t visited = 0;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    ++visited;
    for (std::size_t j = 0; j < n; ++j) {
      if (!seen[j] && touches(i, j)) {
        seen[j] = true;
        frontier.push(j);
      }
    }
  }
  return visited == n;
}

MazeSkeleton build_default_maze() {
  const Vec2 start{65, 0};
  const Vec2 choice{65, 170};
  const Vec2 top_left{0, 170};
  const Vec2 top_right{130, 170};
  const Vec2 bottom_left{0, 0};
  const Vec2 bottom_right{130, 0};
  std::vector<Segment> segments{
      {start, choice},               // 0: central stem
      {choice, top_left},            // 1: left choice arm
      {choice, top_right},           // 2: right choice arm
      {top_left, bottom_left},       // 3: left return arm
      {top_right, bottom_right},     // 4: right return arm
      {bottom_left, start},          // 5: bottom crossbar, left half
      {bottom_right, start},         // 6: bottom crossbar, right half
  };
  return MazeSkeleton(std::move(segments), {top_left, top_right});
}

SkeletonPoint project_to_skeleton(const MazeSkeleton& skeleton, Vec2 point) {
  SkeletonPoint best;
  best.distance_cm = std::numeric_limits<double>::infinity();
  const auto& segments = skeleton.segments();
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    const Vec2 d = s.b - s.a;
    const double len2 = d.x * d.x + d.y * d.y;
    const Vec2 rel = point - s.a;
    const double t = std::clamp((rel.x * d.x + rel.y * d.y) / len2, 0.0, 1.0);
    const Vec2 foot = s.a + t * d;
    const double dist = distance(point, foot);
    // Strictly-better only, so the earliest segment keeps a tie.
    if (dist < best.distance_cm - kTieTolerance) {
      best.segment_index = i;
      best.offset_cm = t * std::sqrt(len2);
      best.position = t == 0.0 ? s.a : (t == 1.0 ? s.b : foot);
      best.distance_cm = dist;
    }
  }
  return best;
}

std::optional<double> quantize_direction(double angle_deg) {
  const double wrapped = wrap_deg_360(angle_deg);
  const double cardinal = nearest_cardinal(wrapped);
  if (abs_angle_diff_deg(wrapped, cardinal) <= 10.0) return cardinal;
  return std::nullopt;
}

double nearest_cardinal(double angle_deg) {
  const double wrapped = wrap_deg_360(angle_deg);
  return wrap_deg_360(std::round(wrapped / 90.0) * 90.0);
}

MazeSkeleton parse_maze(std::istream& in) {
  std::vector<Segment> segments;
  std::vector<Vec2> rewards;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto fields = split_whitespace(line);
    if (fields.empty()) continue;
    auto num = [&](std::size_t i) { return parse_double(fields[i], line_no); };
    if (fields[0] == "R") {
      if (fields.size() != 3) {
        throw ParseError("line " + std::to_string(line_no) + ": reward site needs `R x y`");
      }
      rewards.push_back({num(1), num(2)});
    } else {
      if (fields.size() != 4) {
        throw ParseError("line " + std::to_string(line_no) + ": segment needs `x1 y1 x2 y2`");
      }
      segments.push_back({{num(0), num(1)}, {num(2), num(3)}});
    }
  }
  if (segments.empty()) throw ParseError("maze file defines no segments");
  return MazeSkeleton(std::move(segments), std::move(rewards));
}

MazeSkeleton load_maze(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open maze file " + path.string());
  return parse_maze(in);
}

void write_maze(std::ostream& out, const MazeSkeleton& skeleton) {
  out << "# x1 y1 x2 y2 (cm); segment 0 is the start stem\n";
  for (const auto& s : skeleton.segments()) {
    out << format_double(s.a.x) << ' ' << format_double(s.a.y) << ' ' << format_double(s.b.x)
        << ' ' << format_double(s.b.y) << '\n';
  }
  for (const auto& r : skeleton.reward_sites()) {
    out << "R " << format_double(r.x) << ' ' << format_double(r.y) << '\n';
  }
}

}  // namespace brainslam
