#include "brainslam/view_cells.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "brainslam/text_io.hpp"

namespace brainslam {

ViewCellRegistry::ViewCellRegistry(double match_threshold_cm, double inject_energy,
                                   std::int64_t inject_min_age_ms)
    : threshold_(match_threshold_cm), energy_(inject_energy), min_age_ms_(inject_min_age_ms) {
  if (!(match_threshold_cm > 0.0)) throw ValidationError("match threshold must be positive");
  if (!(inject_energy > 0.0)) throw ValidationError("injection energy must be positive");
  if (inject_min_age_ms < 0) throw ValidationError("injection minimum age must be nonnegative");
}

ViewMatch ViewCellRegistry::match_or_create(Vec2 decoded_position, const PoseEstimate& current_pose,
                                            std::int64_t t_ms) {
  if (!std::isfinite(decoded_position.x) || !std::isfinite(decoded_position.y)) {
    throw ValidationError("decoded position must be finite");
  }
  last_t_ms_ = t_ms;
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_id = 0;
  for (const auto& cell : cells_) {
    const double d = distance(cell.stored_position, decoded_position);
    if (d < best) {
      best = d;
      best_id = cell.id;
    }
  }
  if (best < threshold_) {
    active_ = best_id;
    last_was_match_ = true;
    return {best_id, false};
  }
  const std::size_t id = cells_.size();
  cells_.push_back({id, decoded_position, current_pose, t_ms});
  active_ = id;
  last_was_match_ = false;
  return {id, true};
}

bool ViewCellRegistry::on_match_inject(PoseCellNetwork& network) const {
  if (!active_ || !last_was_match_) return false;
  if (last_t_ms_ - cells_[*active_].created_t_ms < min_age_ms_) return false;
  network.inject(cells_[*active_].linked_pose, energy_);
  return true;
}

void write_view_cells_csv(std::ostream& out, const ViewCellRegistry& registry) {
  out << "id,x_cm,y_cm,pose_x_cm,pose_y_cm,pose_theta_deg,created_t_ms\n";
  for (const auto& c : registry.cells()) {
    out << c.id << ',' << format_double(c.stored_position.x) << ',' << format_double(c.stored_position.y)
        << ',' << format_double(c.linked_pose.position.x) << ',' << format_double(c.linked_pose.position.y)
        << ',' << format_double(c.linked_pose.theta_deg) << ',' << c.created_t_ms << '\n';
  }
}

void save_view_cells(const std::filesystem::path& path, const ViewCellRegistry& registry) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeAbort("cannot write " + path.string());
  write_view_cells_csv(out, registry);
}

}  // namespace brainslam
