#include "brainslam/lfp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace brainslam {

namespace {

// Paul Kellet's refined pink-noise filter (about -3 dB/octave above 10 Hz at
// 44.1 kHz; close enough at 2 kHz for a background spectrum).
class PinkNoise {
 public:
  explicit PinkNoise(std::uint64_t seed) : rng_(seed) {}

  double next() {
    const double white = normal_(rng_);
    b_[0] = 0.99886 * b_[0] + white * 0.0555179;
    b_[1] = 0.99332 * b_[1] + white * 0.0750759;
    b_[2] = 0.96900 * b_[2] + white * 0.1538520;
    b_[3] = 0.86650 * b_[3] + white * 0.3104856;
    b_[4] = 0.55000 * b_[4] + white * 0.5329522;
    b_[5] = -0.7616 * b_[5] - white * 0.0168980;
    const double pink = b_[0] + b_[1] + b_[2] + b_[3] + b_[4] + b_[5] + b_[6] + white * 0.5362;
    b_[6] = white * 0.115926;
    return pink * 0.11;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  double b_[7] = {0, 0, 0, 0, 0, 0, 0};
};

}  // namespace

LfpGenConfig default_lfp_config(const MazeSkeleton& maze) {
  LfpGenConfig config;
  const std::size_t n = config.n_channels;
  const double total = maze.total_length();
  for (std::size_t c = 0; c < n; ++c) {
    double target = (static_cast<double>(c) + 0.5) * total / static_cast<double>(n);
    for (const auto& seg : maze.segments()) {
      if (target <= seg.length()) {
        config.place_field_centers.push_back(seg.point_at(target));
        break;
      }
      target -= seg.length();
    }
    config.carrier_hz.push_back(30.0 + 90.0 * static_cast<double>(c) / static_cast<double>(n - 1));
    config.preferred_direction_deg.push_back(90.0 * static_cast<double>(c % 4));
  }
  return config;
}

LfpRecording synthesize_lfp(std::span<const TrajectorySample> trajectory, const LfpGenConfig& config,
                            std::uint64_t seed) {
  if (trajectory.empty()) throw ValidationError("synthesize_lfp: empty trajectory");
  const std::size_t n_ch = config.n_channels;
  if (config.place_field_centers.size() != n_ch || config.carrier_hz.size() != n_ch ||
      config.preferred_direction_deg.size() != n_ch) {
    throw ValidationError("synthesize_lfp: per-channel tables must have n_channels entries");
  }
  for (double f : config.carrier_hz) {
    if (!(f > 0.0 && f < kLfpSampleRateHz / 2.0)) {
      throw ValidationError("synthesize_lfp: carrier frequency outside (0, Nyquist)");
    }
  }

  LfpRecording rec;
  rec.t0_ms = trajectory.front().t_ms;
  const std::int64_t duration_ms = trajectory.back().t_ms - trajectory.front().t_ms;
  const auto n = static_cast<std::size_t>(duration_ms * 2);
  rec.channels.assign(n_ch, std::vector<double>(n, 0.0));

  // Agent state at every LFP sample, shared by all channels.
  std::vector<Vec2> pos(n);
  std::vector<double> speed(n);
  std::vector<double> heading(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(rec.t0_ms) + static_cast<double>(i) * 1000.0 / kLfpSampleRateHz;
    while (k + 1 < trajectory.size() && static_cast<double>(trajectory[k + 1].t_ms) <= t) ++k;
    const auto& a = trajectory[k];
    if (k + 1 < trajectory.size()) {
      const auto& b = trajectory[k + 1];
      const double u = (t - static_cast<double>(a.t_ms)) / static_cast<double>(b.t_ms - a.t_ms);
      pos[i] = a.position + u * (b.position - a.position);
      speed[i] = a.speed_cm_s + u * (b.speed_cm_s - a.speed_cm_s);
      heading[i] = b.direction_deg;
    } else {
      pos[i] = a.position;
      speed[i] = a.speed_cm_s;
      heading[i] = a.direction_deg;
    }
  }

  const double dt = 1.0 / kLfpSampleRateHz;
  const double two_sigma2 = 2.0 * config.place_field_sigma_cm * config.place_field_sigma_cm;
  for (std::size_t c = 0; c < n_ch; ++c) {
    PinkNoise pink(seed * 1000003ULL + c);
    auto& out = rec.channels[c];
    const double theta_phase = 0.1 * static_cast<double>(c);
    const double carrier_phase = 0.7 * static_cast<double>(c);
    const Vec2 centre = config.place_field_centers[c];
    const double pref = deg_to_rad(config.preferred_direction_deg[c]);
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) * dt;
      const double theta_amp = config.theta_base_amplitude + config.theta_gain_per_cm_s * speed[i];
      const double theta = theta_amp * std::sin(2.0 * kPi * config.theta_hz * t + theta_phase);
      const Vec2 d = pos[i] - centre;
      const double field = std::exp(-(d.x * d.x + d.y * d.y) / two_sigma2);
      const double tuning =
          (1.0 + config.direction_gain * std::cos(deg_to_rad(heading[i]) - pref)) /
          (1.0 + config.direction_gain);
      const double burst = config.burst_amplitude * field * tuning *
                           std::sin(2.0 * kPi * config.carrier_hz[c] * t + carrier_phase);
      out[i] = config.pink_amplitude * pink.next() + theta + burst;
    }
  }
  return rec;
}

}  // namespace brainslam
