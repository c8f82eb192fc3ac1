#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brainslam/decoder.hpp"
#include "brainslam/experience_map.hpp"
#include "brainslam/maze.hpp"
#include "brainslam/metrics.hpp"
#include "brainslam/pose_cells.hpp"
#include "brainslam/trajectory.hpp"
#include "brainslam/view_cells.hpp"

namespace brainslam {

struct SlamParams {
  PoseCellConfig pose;  // run_session centres it on the maze
  double match_threshold_cm = kDefaultMatchThresholdCm;
  double inject_energy = kDefaultInjectEnergy;
  std::int64_t inject_min_age_ms = kDefaultInjectMinAgeMs;
  double initial_energy = 1.0;
  bool loop_closure = true;  // false skips the view-cell injection
  // When set, an extinguished network dumps its pre-dynamics activity here.
  std::optional<std::filesystem::path> abort_snapshot;
};

/// The seven per-step phases, in the order they run.
enum class Phase { read_decoding, view_match, inject, dynamics, path_integrate, experience_map, record };
const char* phase_name(Phase phase);
using PhaseObserver = std::function<void(Phase)>;

struct PoseRecord {
  std::int64_t t_ms = 0;
  PoseEstimate estimate;
  TrajectorySample truth;
  std::size_t view_cell = 0;
  std::size_t node = 0;
  std::uint64_t truncation_events = 0;  // cumulative
};

struct SlamResult {
  std::vector<PoseRecord> poses;
  ViewCellRegistry registry;
  ExperienceMap map;
  std::uint64_t injections = 0;
};

/// Runs the loop over every decoding. `truth` must contain a sample at each
/// decoding timestamp; it is only used for the recorded comparison. The
/// network starts as a packet at the first decoding's position and heading.
SlamResult run_slam(std::span<const TrajectorySample> truth, std::span<const Decoding> decodings,
                    const SlamParams& params, const PhaseObserver& observer = {});

struct ReportParams {
  double max_speed_cm_s = 50.0;
  double aliasing_slack_cm = 2.0 * kDefaultMatchThresholdCm + 20.0;
  std::int64_t loop_closure_min_age_ms = 10000;
};

struct SessionReport {
  std::size_t n_steps = 0;
  double online_location_mae_cm = 0.0;
  double decoded_location_mae_cm = 0.0;
  double direction_mae_deg = 0.0;
  double speed_mae_cm_s = 0.0;
  std::optional<SimilarityFit> map_fit;  // empty when the map is degenerate
  double endpoint_error_cm = 0.0;
  std::size_t n_view_cells = 0;
  std::size_t n_experience_nodes = 0;
  std::size_t n_links = 0;
  std::size_t loop_closures = 0;
  std::size_t aliasing_violations = 0;
  std::uint64_t border_truncation_events = 0;

  std::string to_json() const;
};

/// Map nodes paired with the true position at their creation time.
SimilarityFit map_fidelity(const ExperienceMap& map, std::span<const PoseRecord> poses);

/// Links whose endpoints were created further apart (in truth) than the agent
/// could travel between activating `from` and switching to `to`, plus slack.
std::size_t count_aliasing_violations(const ExperienceMap& map, std::span<const PoseRecord> poses,
                                      const ReportParams& params);

SessionReport summarize(std::span<const PoseRecord> poses, std::span<const Decoding> decodings,
                        const ExperienceMap& map, std::size_t n_view_cells, const ReportParams& params = {});

void write_poses_csv(const std::filesystem::path& path, std::span<const PoseRecord> poses);
std::vector<PoseRecord> load_poses_csv(const std::filesystem::path& path);

struct RunConfig {
  std::optional<std::filesystem::path> maze_file;
  std::optional<std::filesystem::path> trajectory_file;  // otherwise simulated
  SessionConfig session;
  std::string decoder_preset = "rat1";
  std::optional<std::filesystem::path> decodings_file;  // otherwise the noisy oracle
  std::uint64_t decoder_seed = 7;
  double train_fraction = 0.8;
  bool full_trajectory = false;  // run on every sample instead of the test split
  SlamParams slam;
  ReportParams report;
  std::optional<std::filesystem::path> output_dir;
};

struct SessionOutcome {
  SessionReport report;
  SlamResult slam;
  std::vector<Decoding> decodings;
};

/// Loads or simulates the inputs, runs SLAM on the test split and, when an
/// output directory is set, writes report.json, decodings.csv, view_cells.csv,
/// poses.csv, map.json and map.svg.
SessionOutcome run_session(const RunConfig& config);

/// Recomputes the report from a run's output directory.
SessionReport report_from_artifacts(const std::filesystem::path& dir, const ReportParams& params = {});

}  // namespace brainslam
