#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "brainslam/common.hpp"
#include "brainslam/maze.hpp"

namespace brainslam {

inline constexpr std::int64_t kSampleIntervalMs = 40;  // 25 Hz tracking

// 20 px correspond to about 58 mm.
inline constexpr double kCmPerPixel = 0.29;

struct TrajectorySample {
  std::int64_t t_ms = 0;
  Vec2 position;
  double speed_cm_s = 0.0;
  double direction_deg = 0.0;  // [0, 360), 0 = +x, 90 = +y
};

struct TimedPosition {
  std::int64_t t_ms = 0;
  Vec2 position;
};

enum class TurnRule { match, mismatch };

struct SessionConfig {
  int n_trials = 20;
  double mean_speed_cm_s = 20.0;
  double max_speed_cm_s = 50.0;
  double speed_sd_cm_s = 5.0;           // stationary spread of the target speed
  double speed_correlation_s = 2.0;     // target-speed time constant
  double speed_smoothing_s = 0.5;       // low-pass on the realised speed
  double braking_cm_s2 = 60.0;
  double pause_ms_at_reward = 2000.0;
  double inter_trial_pause_ms = 25000.0;
  TurnRule turn_rule = TurnRule::match;
  std::uint64_t rng_seed = 42;
};

struct TrialRecord {
  std::size_t forced_reward = 0;  // index into MazeSkeleton::reward_sites
  std::size_t choice_reward = 0;
  std::int64_t forced_start_ms = 0;
  std::int64_t choice_start_ms = 0;  // agent leaves the start point for the choice run
  std::int64_t reward_arrival_ms = 0;
  std::int64_t end_ms = 0;           // back at the start point
};

struct SimulatedSession {
  std::vector<TrajectorySample> samples;
  std::vector<TrialRecord> trials;
  std::size_t reward_visits = 0;

  std::int64_t duration_ms() const {
    return samples.empty() ? 0 : samples.back().t_ms - samples.front().t_ms;
  }
};

/// Each trial is a forced-turn run (start -> forced reward side -> return arm ->
/// start) followed by a choice run whose side obeys the turn rule, a pause at
/// the chosen reward and the trip back to start. Deterministic given the seed.
SimulatedSession simulate_session(const MazeSkeleton& maze, const SessionConfig& config);

/// Labels from positions: speed from the displacement over the interval,
/// heading snapped to a cardinal when within 10 degrees, kept raw otherwise.
/// Stationary samples carry the previous heading; the first sample copies the
/// second.
std::vector<TrajectorySample> derive_kinematics(std::span<const TimedPosition> positions);

std::vector<TrajectorySample> load_trajectory(const std::filesystem::path& path);
void save_trajectory(const std::filesystem::path& path, std::span<const TrajectorySample> samples);

// Split used everywhere: samples [0, split_index) train, the rest test.
std::size_t split_index(std::size_t n_samples, double train_fraction);

}  // namespace brainslam
