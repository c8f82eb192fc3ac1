#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "brainslam/maze.hpp"
#include "brainslam/pose_cells.hpp"

namespace brainslam {

struct ExperienceNode {
  std::size_t id = 0;
  Vec2 position;            // map frame: relative to the first node
  double theta_deg = 0.0;   // relative to the first node, [0, 360)
  std::size_t view_cell_id = 0;
  std::int64_t created_t_ms = 0;
  bool active = false;
};

struct OdometryDelta {
  double dx_cm = 0.0;
  double dy_cm = 0.0;
  double dtheta_deg = 0.0;
};

struct ExperienceLink {
  std::size_t from = 0;
  std::size_t to = 0;
  OdometryDelta delta;  // odometry accumulated since `from` became active
  std::uint64_t traversals = 0;
  // Shortest time, over traversals, between `from` becoming active and the
  // switch to `to`.
  std::int64_t min_gap_ms = 0;
};

/// Graph of experiences, one per view cell. Node positions come from the
/// pose-cell estimate at creation and are never revised afterwards.
class ExperienceMap {
 public:
  /// One pipeline step. `step_odometry` is this step's decoded movement; it is
  /// accumulated until the active node changes, at which point the link from
  /// the previous node is created or refreshed (count incremented, delta
  /// replaced by the latest traversal).
  void on_step(std::size_t view_cell_id, bool is_new_view_cell, const PoseEstimate& pose,
               const OdometryDelta& step_odometry, std::int64_t t_ms);

  const std::vector<ExperienceNode>& nodes() const { return nodes_; }
  std::vector<ExperienceLink> links() const;  // ordered by (from, to)
  std::size_t link_count() const { return links_.size(); }
  std::optional<std::size_t> active_node() const { return active_; }
  std::optional<std::size_t> node_for_view_cell(std::size_t view_cell_id) const;
  /// World pose of the first node; map coordinates are relative to it.
  const PoseEstimate& frame_origin() const { return origin_; }
  /// Map-frame position back in world coordinates.
  Vec2 to_world(Vec2 map_position) const { return map_position + origin_.position; }

  std::string to_json() const;
  static ExperienceMap from_json(const std::string& text);

 private:
  std::vector<ExperienceNode> nodes_;
  std::map<std::pair<std::size_t, std::size_t>, ExperienceLink> links_;
  std::map<std::size_t, std::size_t> node_of_view_;
  std::optional<std::size_t> active_;
  PoseEstimate origin_;
  OdometryDelta pending_;
  std::int64_t active_since_ms_ = 0;
};

void save_map(const std::filesystem::path& path, const ExperienceMap& map);
ExperienceMap load_map(const std::filesystem::path& path);

/// Nodes as dots, links as lines, with the maze skeleton overlaid in world
/// coordinates when given.
std::string render_svg(const ExperienceMap& map, const MazeSkeleton* skeleton = nullptr);

}  // namespace brainslam
