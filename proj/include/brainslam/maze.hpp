#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "brainslam/common.hpp"

namespace brainslam {

struct Segment {
  Vec2 a;
  Vec2 b;

  double length() const { return distance(a, b); }
  // Endpoints differ in exactly one coordinate.
  bool axis_aligned() const { return (a.x == b.x) != (a.y == b.y); }
  Vec2 point_at(double offset_cm) const;
};

struct BoundingBox {
  Vec2 min;
  Vec2 max;
  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  Vec2 center() const { return 0.5 * (min + max); }
};

struct SkeletonPoint {
  std::size_t segment_index = 0;
  double offset_cm = 0.0;
  Vec2 position;
  double distance_cm = 0.0;  // from the projected input point
};

/// Piecewise-linear track geometry in centimetres.
///
/// Segment 0 is the start stem, listed from the start point (endpoint a) to
/// the choice point (endpoint b); the trial simulator relies on that.
class MazeSkeleton {
 public:
  MazeSkeleton(std::vector<Segment> segments, std::vector<Vec2> reward_sites);

  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<Vec2>& reward_sites() const { return reward_sites_; }
  BoundingBox bounding_box() const;
  double total_length() const;

  bool all_axis_aligned() const;
  // Single connected component over shared endpoints.
  bool is_connected() const;

 private:
  std::vector<Segment> segments_;
  std::vector<Vec2> reward_sites_;
};

/// Figure-of-eight double-T maze, 130 cm x 170 cm: central stem, top crossbar
/// split into left/right choice arms, return arms down both sides and a bottom
/// crossbar back to the stem base. Rewards sit at the two choice-arm ends.
MazeSkeleton build_default_maze();

/// Nearest point on any segment. Ties go to the lowest segment index, then the
/// lowest offset.
SkeletonPoint project_to_skeleton(const MazeSkeleton& skeleton, Vec2 point);

/// Returns the cardinal heading (0, 90, 180, 270) when `angle_deg` is within
/// 10 degrees of it, std::nullopt otherwise.
std::optional<double> quantize_direction(double angle_deg);

double nearest_cardinal(double angle_deg);

// Plain-text format: `x1 y1 x2 y2` per segment, `R x y` per reward site,
// `#` comments and blank lines ignored.
MazeSkeleton parse_maze(std::istream& in);
MazeSkeleton load_maze(const std::filesystem::path& path);
void write_maze(std::ostream& out, const MazeSkeleton& skeleton);

}  // namespace brainslam
