#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "brainslam/common.hpp"
#include "brainslam/maze.hpp"
#include "brainslam/trajectory.hpp"

namespace brainslam {

inline constexpr double kLfpSampleRateHz = 2000.0;
inline constexpr std::size_t kLfpChannels = 16;

struct LfpRecording {
  double sample_rate_hz = kLfpSampleRateHz;
  std::int64_t t0_ms = 0;
  std::vector<std::vector<double>> channels;

  std::size_t n_channels() const { return channels.size(); }
  std::size_t n_samples() const { return channels.empty() ? 0 : channels.front().size(); }
};

/// Generator for the synthetic recordings. Each channel mixes pink noise, a
/// theta rhythm whose amplitude grows with running speed, and a burst at its
/// own carrier frequency gated by a Gaussian place field (and weakly by
/// heading).
struct LfpGenConfig {
  std::size_t n_channels = kLfpChannels;
  double pink_amplitude = 1.0;
  double theta_hz = 8.0;
  double theta_base_amplitude = 0.5;
  double theta_gain_per_cm_s = 0.05;
  double place_field_sigma_cm = 15.0;
  double burst_amplitude = 2.0;
  double direction_gain = 0.5;
  std::vector<Vec2> place_field_centers;      // one per channel
  std::vector<double> carrier_hz;             // one per channel, distinct, 30-120 Hz
  std::vector<double> preferred_direction_deg;  // one per channel
};

/// Place-field centres spread evenly by arc length over the skeleton; carriers
/// evenly spaced over 30-120 Hz.
LfpGenConfig default_lfp_config(const MazeSkeleton& maze);

/// 2 kHz, n_channels series covering [t_first, t_last) of the trajectory.
LfpRecording synthesize_lfp(std::span<const TrajectorySample> trajectory, const LfpGenConfig& config,
                            std::uint64_t seed);

}  // namespace brainslam
