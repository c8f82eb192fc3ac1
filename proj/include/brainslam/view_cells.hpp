#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "brainslam/pose_cells.hpp"

namespace brainslam {

// 20 px at 2.9 mm per px.
inline constexpr double kDefaultMatchThresholdCm = 5.8;
inline constexpr double kDefaultInjectEnergy = 0.02;
// Cells younger than this do not inject, so the cell the agent has just laid
// down cannot hold the packet back on a first pass.
inline constexpr std::int64_t kDefaultInjectMinAgeMs = 10000;

struct ViewCell {
  std::size_t id = 0;
  Vec2 stored_position;     // decoded position at creation
  PoseEstimate linked_pose; // pose-cell centre at creation
  std::int64_t created_t_ms = 0;
};

struct ViewMatch {
  std::size_t cell_id = 0;
  bool is_new = false;
};

/// View cells keyed by decoded position. Matching takes the nearest stored
/// position (earliest cell on ties) and accepts it when strictly closer than
/// the threshold.
class ViewCellRegistry {
 public:
  explicit ViewCellRegistry(double match_threshold_cm = kDefaultMatchThresholdCm,
                            double inject_energy = kDefaultInjectEnergy,
                            std::int64_t inject_min_age_ms = kDefaultInjectMinAgeMs);

  ViewMatch match_or_create(Vec2 decoded_position, const PoseEstimate& current_pose, std::int64_t t_ms);

  /// Injects at the active cell's linked pose when the last match found an
  /// existing cell at least the minimum age old; does nothing after a
  /// creation. Returns whether it injected.
  bool on_match_inject(PoseCellNetwork& network) const;

  const std::vector<ViewCell>& cells() const { return cells_; }
  std::optional<std::size_t> current_active() const { return active_; }
  bool last_was_match() const { return last_was_match_; }
  double match_threshold_cm() const { return threshold_; }
  double inject_energy() const { return energy_; }
  std::int64_t inject_min_age_ms() const { return min_age_ms_; }

 private:
  std::vector<ViewCell> cells_;
  std::optional<std::size_t> active_;
  bool last_was_match_ = false;
  std::int64_t last_t_ms_ = 0;
  double threshold_;
  double energy_;
  std::int64_t min_age_ms_;
};

// id,x_cm,y_cm,pose_x_cm,pose_y_cm,pose_theta_deg,created_t_ms
void write_view_cells_csv(std::ostream& out, const ViewCellRegistry& registry);
void save_view_cells(const std::filesystem::path& path, const ViewCellRegistry& registry);

}  // namespace brainslam
