#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "brainslam/common.hpp"
#include "brainslam/trajectory.hpp"

namespace brainslam {

struct Decoding {
  std::int64_t t_ms = 0;
  Vec2 position;
  double speed_cm_s = 0.0;
  double direction_deg = 0.0;
};

/// Decoder error model. A zero field disables that noise source; in particular
/// kappa_dir == 0 means "no heading jitter", not a uniform heading.
struct NoiseProfile {
  double sigma_xy_cm = 0.0;        // per-axis Gaussian position noise
  double kappa_dir = 0.0;          // von Mises concentration of heading jitter
  double sigma_speed_cm_s = 0.0;   // Gaussian speed noise, clipped at 0
  double cardinal_flip_prob = 0.0; // chance of reporting a wrong cardinal
};

struct DecodingTargets {
  double location_mae_cm = 0.0;
  double direction_mae_deg = 0.0;
  double speed_mae_cm_s = 0.0;
};

struct DecodingErrors {
  double location_mae_cm = 0.0;   // mean Euclidean distance
  double direction_mae_deg = 0.0; // mean minimal angular difference
  double speed_mae_cm_s = 0.0;
};

/// Draw from a von Mises distribution centred on 0 (radians), Best-Fisher.
double sample_von_mises(double kappa, std::mt19937_64& rng);

/// One decoding per trajectory sample. Deterministic given the seed.
std::vector<Decoding> noisy_oracle(std::span<const TrajectorySample> trajectory,
                                   const NoiseProfile& profile, std::uint64_t seed);

DecodingErrors decoding_errors(std::span<const TrajectorySample> truth,
                               std::span<const Decoding> decodings);

struct CalibrationOptions {
  std::size_t draws = 100000;
  double flip_share = 0.2;        // fraction of the heading MAE spent on cardinal flips
  double tolerance = 0.02;        // relative
  int max_iterations = 64;
  double reference_speed_cm_s = 20.0;
  std::uint64_t seed = 20240601;
};

/// Reference draws used for calibration: `n` samples at constant speed,
/// heading cycling through the four cardinals.
std::vector<TrajectorySample> calibration_reference(std::size_t n, double speed_cm_s);

/// Position and speed noise in closed form; heading concentration by bisection
/// on the empirical heading MAE over the reference draws.
NoiseProfile calibrate(const DecodingTargets& targets, const CalibrationOptions& options = {});

/// Table targets for "rat1", "rat2", "rat3".
DecodingTargets rat_targets(std::string_view name);
/// "zero", "rat1", "rat2", "rat3".
NoiseProfile preset_profile(std::string_view name);

/// Single-pass, timestamp-ordered reader over decodings.
class DecodingStream {
 public:
  explicit DecodingStream(std::vector<Decoding> decodings);

  std::optional<Decoding> next();
  std::size_t size() const { return decodings_.size(); }
  std::size_t consumed() const { return cursor_; }

 private:
  std::vector<Decoding> decodings_;
  std::size_t cursor_ = 0;
};

std::vector<Decoding> load_decodings(const std::filesystem::path& path);
void save_decodings(const std::filesystem::path& path, std::span<const Decoding> decodings);

}  // namespace brainslam
