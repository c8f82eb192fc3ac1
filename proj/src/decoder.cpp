#include "brainslam/decoder.hpp"

#include <algorithm>
#include <cmath>

#include "brainslam/kinematics_csv.hpp"

namespace brainslam {

namespace {

// Mean error of a flip from an exact cardinal: other cardinals sit at 90, 90
// and 180 degrees.
constexpr double kMeanFlipErrorDeg = 120.0;

}  // namespace

double sample_von_mises(double kappa, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (kappa < 1e-8) return kPi * (2.0 * unit(rng) - 1.0);
  const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
  const double r = (1.0 + rho * rho) / (2.0 * rho);
  while (true) {
    const double u1 = unit(rng);
    const double u2 = unit(rng);
    const double u3 = unit(rng);
    const double z = std::cos(kPi * u1);
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double angle = std::acos(std::clamp(f, -1.0, 1.0));
      return u3 > 0.5 ? angle : -angle;
    }
  }
}

std::vector<Decoding> noisy_oracle(std::span<const TrajectorySample> trajectory,
                                   const NoiseProfile& profile, std::uint64_t seed) {
  if (profile.sigma_xy_cm < 0.0 || profile.kappa_dir < 0.0 || profile.sigma_speed_cm_s < 0.0 ||
      !(profile.cardinal_flip_prob >= 0.0 && profile.cardinal_flip_prob <= 1.0)) {
    throw ValidationError("noise profile fields must be nonnegative, flip probability in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> other_cardinal(1, 3);

  std::vector<Decoding> out;
  out.reserve(trajectory.size());
  for (const auto& s : trajectory) {
    Decoding d;
    d.t_ms = s.t_ms;
    const double nx = normal(rng);
    const double ny = normal(rng);
    d.position = {s.position.x + profile.sigma_xy_cm * nx, s.position.y + profile.sigma_xy_cm * ny};
    d.speed_cm_s = std::max(0.0, s.speed_cm_s + profile.sigma_speed_cm_s * normal(rng));
    const bool flip = unit(rng) < profile.cardinal_flip_prob;
    const int offset = other_cardinal(rng);
    if (flip) {
      d.direction_deg = wrap_deg_360(nearest_cardinal(s.direction_deg) + 90.0 * offset);
    } else if (profile.kappa_dir > 0.0) {
      d.direction_deg =
          wrap_deg_360(s.direction_deg + rad_to_deg(sample_von_mises(profile.kappa_dir, rng)));
    } else {
      d.direction_deg = s.direction_deg;
    }
    out.push_back(d);
  }
  return out;
}

DecodingErrors decoding_errors(std::span<const TrajectorySample> truth,
                               std::span<const Decoding> decodings) {
  if (truth.size() != decodings.size()) throw ValidationError("decoding_errors: length mismatch");
  if (truth.empty()) return {};
  DecodingErrors e;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    e.location_mae_cm += distance(truth[i].position, decodings[i].position);
    e.direction_mae_deg += abs_angle_diff_deg(truth[i].direction_deg, decodings[i].direction_deg);
    e.speed_mae_cm_s += std::abs(truth[i].speed_cm_s - decodings[i].speed_cm_s);
  }
  const auto n = static_cast<double>(truth.size());
  e.location_mae_cm /= n;
  e.direction_mae_deg /= n;
  e.speed_mae_cm_s /= n;
  return e;
}

std::vector<TrajectorySample> calibration_reference(std::size_t n, double speed_cm_s) {
  std::vector<TrajectorySample> ref(n);
  for (std::size_t i = 0; i < n; ++i) {
    ref[i].t_ms = static_cast<std::int64_t>(i) * kSampleIntervalMs;
    ref[i].position = {0.0, 0.0};
    ref[i].speed_cm_s = speed_cm_s;
    ref[i].direction_deg = 90.0 * static_cast<double>(i % 4);
  }
  return ref;
}

NoiseProfile calibrate(const DecodingTargets& targets, const CalibrationOptions& options) {
  if (!(targets.location_mae_cm > 0.0 && targets.direction_mae_deg > 0.0 &&
        targets.speed_mae_cm_s > 0.0)) {
    throw ValidationError("calibration targets must be positive");
  }
  if (!(options.flip_share >= 0.0 && options.flip_share < 1.0)) {
    throw ValidationError("flip share must be in [0, 1)");
  }
  NoiseProfile profile;
  // Rayleigh mean: E|e| = sigma sqrt(pi / 2).
  profile.sigma_xy_cm = targets.location_mae_cm * std::sqrt(2.0 / kPi);
  // Half-normal mean: E|e| = sigma sqrt(2 / pi).
  profile.sigma_speed_cm_s = targets.speed_mae_cm_s * std::sqrt(kPi / 2.0);
  profile.cardinal_flip_prob = options.flip_share * targets.direction_mae_deg / kMeanFlipErrorDeg;

  const auto reference = calibration_reference(options.draws, options.reference_speed_cm_s);
  auto heading_mae = [&](double kappa) {
    NoiseProfile trial = profile;
    trial.kappa_dir = kappa;
    return decoding_errors(reference, noisy_oracle(reference, trial, options.seed)).direction_mae_deg;
  };

  // Heading MAE falls monotonically with concentration; bisect on log(kappa).
  double lo = std::log(1e-3);
  double hi = std::log(1e7);
  const double target = targets.direction_mae_deg;
  for (int it = 0; it < options.max_iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double mae = heading_mae(std::exp(mid));
    if (std::abs(mae - target) <= 0.0025 * target) {
      profile.kappa_dir = std::exp(mid);
      return profile;
    }
    if (mae > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double kappa = std::exp(0.5 * (lo + hi));
  if (std::abs(heading_mae(kappa) - target) > options.tolerance * target) {
    throw RuntimeAbort("calibration did not converge for heading MAE " + std::to_string(target));
  }
  profile.kappa_dir = kappa;
  return profile;
}

DecodingTargets rat_targets(std::string_view name) {
  if (name == "rat1") return {2.188, 7.816, 0.486};
  if (name == "rat2") return {1.641, 6.997, 0.316};
  if (name == "rat3") return {1.849, 12.354, 1.487};
  throw ValidationError("unknown rat preset '" + std::string(name) + "'");
}

NoiseProfile preset_profile(std::string_view name) {
  if (name == "zero") return {};
  // Frozen output of calibrate(rat_targets(name)) with default options.
  if (name == "rat1") return {1.7457714190366695, 52.09509987713065, 0.60911067073533309, 0.013026666666666667};
  if (name == "rat2") return {1.3093285642775021, 64.501573979509473, 0.39604726739169804, 0.011661666666666666};
  if (name == "rat3") return {1.4752885529244981, 20.955067422224655, 1.8636781221881489, 0.020590000000000001};
  throw ValidationError("unknown decoder preset '" + std::string(name) + "'");
}

DecodingStream::DecodingStream(std::vector<Decoding> decodings) : decodings_(std::move(decodings)) {
  for (std::size_t i = 1; i < decodings_.size(); ++i) {
    if (decodings_[i].t_ms <= decodings_[i - 1].t_ms) {
      throw ValidationError("decoding timestamps must strictly increase");
    }
  }
}

std::optional<Decoding> DecodingStream::next() {
  if (cursor_ >= decodings_.size()) return std::nullopt;
  return decodings_[cursor_++];
}

std::vector<Decoding> load_decodings(const std::filesystem::path& path) {
  return read_kinematics_csv<Decoding>(path);
}

void save_decodings(const std::filesystem::path& path, std::span<const Decoding> decodings) {
  write_kinematics_csv(path, decodings);
}

}  // namespace brainslam
