#include "brainslam/pose_cells.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace brainslam {

double Kernel::sum() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

Kernel build_kernel(double variance, int radius, KernelSign sign, double inhibitory_amplitude) {
  if (!(variance > 0.0)) throw ValidationError("kernel variance must be positive");
  if (radius < 1) throw ValidationError("kernel radius must be at least 1");
  Kernel k;
  k.sign = sign;
  k.variance = variance;
  k.radius = radius;
  for (int d = -radius; d <= radius; ++d) {
    k.profile.push_back(std::exp(-static_cast<double>(d * d) / (2.0 * variance)));
  }
  const double s = std::accumulate(k.profile.begin(), k.profile.end(), 0.0);
  const double target = sign == KernelSign::excitatory ? 1.0 : -inhibitory_amplitude;
  k.scale = target / (s * s * s);
  const auto side = static_cast<std::size_t>(k.side());
  k.weights.resize(side * side * side);
  for (std::size_t a = 0; a < side; ++a) {
    for (std::size_t b = 0; b < side; ++b) {
      for (std::size_t c = 0; c < side; ++c) {
        k.weights[(a * side + b) * side + c] = k.scale * k.profile[a] * k.profile[b] * k.profile[c];
      }
    }
  }
  return k;
}

PoseCellConfig centred_on(const MazeSkeleton& maze, PoseCellConfig config) {
  const Vec2 c = maze.bounding_box().center();
  config.origin_cm = {c.x - 0.5 * static_cast<double>(config.nx - 1) * config.cell_size_cm,
                      c.y - 0.5 * static_cast<double>(config.ny - 1) * config.cell_size_cm};
  return config;
}

PoseCellNetwork::PoseCellNetwork(const PoseCellConfig& config)
    : config_(config),
      exc_(build_kernel(config.exc_variance, config.exc_radius, KernelSign::excitatory)),
      inh_(build_kernel(config.inh_variance, config.inh_radius, KernelSign::inhibitory,
                        config.inh_amplitude)),
      packet_(build_kernel(config.inject_variance, config.inject_radius, KernelSign::excitatory)) {
  if (config.nx == 0 || config.ny == 0 || config.ntheta == 0) {
    throw ValidationError("pose-cell grid dimensions must be positive");
  }
  if (!(config.cell_size_cm > 0.0)) throw ValidationError("cell size must be positive");
  if (!(config.psi >= 0.0)) throw ValidationError("global inhibition must be nonnegative");
  const std::size_t n = config.nx * config.ny * config.ntheta;
  activity_.assign(n, 0.0);
  scratch_a_.assign(n, 0.0);
  scratch_b_.assign(n, 0.0);
}

void PoseCellNetwork::set_activity(std::vector<double> activity) {
  if (activity.size() != activity_.size()) throw ValidationError("activity size does not match grid");
  activity_ = std::move(activity);
}

double PoseCellNetwork::total() const { return std::accumulate(activity_.begin(), activity_.end(), 0.0); }

Vec2 PoseCellNetwork::cell_position(std::size_t i, std::size_t j) const {
  return {config_.origin_cm.x + static_cast<double>(i) * config_.cell_size_cm,
          config_.origin_cm.y + static_cast<double>(j) * config_.cell_size_cm};
}

double PoseCellNetwork::cell_theta_deg(std::size_t k) const {
  return static_cast<double>(k) * config_.theta_step_deg();
}

void PoseCellNetwork::inject(const PoseEstimate& pose, double energy) {
  if (!(energy > 0.0)) throw ValidationError("injection energy must be positive");
  const double fi = std::round((pose.position.x - config_.origin_cm.x) / config_.cell_size_cm);
  const double fj = std::round((pose.position.y - config_.origin_cm.y) / config_.cell_size_cm);
  if (!(fi >= 0.0 && fi < static_cast<double>(config_.nx) && fj >= 0.0 &&
        fj < static_cast<double>(config_.ny)) ||
      !std::isfinite(pose.theta_deg)) {
    throw ValidationError("pose outside the pose-cell grid");
  }
  const auto ci = static_cast<std::ptrdiff_t>(fi);
  const auto cj = static_cast<std::ptrdiff_t>(fj);
  const auto n_theta = static_cast<std::ptrdiff_t>(config_.ntheta);
  const auto ck = static_cast<std::ptrdiff_t>(std::llround(wrap_deg_360(pose.theta_deg) / config_.theta_step_deg())) % n_theta;
  const int r = packet_.radius;
  for (int a = -r; a <= r; ++a) {
    const std::ptrdiff_t i = ci + a;
    if (i < 0 || i >= static_cast<std::ptrdiff_t>(config_.nx)) continue;
    for (int b = -r; b <= r; ++b) {
      const std::ptrdiff_t j = cj + b;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(config_.ny)) continue;
      for (int c = -r; c <= r; ++c) {
        const std::ptrdiff_t k = ((ck + c) % n_theta + n_theta) % n_theta;
        activity_[index(static_cast<std::size_t>(i), static_cast<std::size_t>(j), static_cast<std::size_t>(k))] +=
            energy * packet_.weight(a, b, c);
      }
    }
  }
}

PoseCellNetwork::Box PoseCellNetwork::active_box() const {
  Box box{config_.nx, 0, config_.ny, 0};
  const std::size_t nt = config_.ntheta;
  for (std::size_t i = 0; i < config_.nx; ++i) {
    for (std::size_t j = 0; j < config_.ny; ++j) {
      const double* row = &activity_[index(i, j, 0)];
      if (std::any_of(row, row + nt, [](double v) { return v != 0.0; })) {
        box.x0 = std::min(box.x0, i);
        box.x1 = std::max(box.x1, i + 1);
        box.y0 = std::min(box.y0, j);
        box.y1 = std::max(box.y1, j + 1);
      }
    }
  }
  return box;
}

// field += kernel * field, evaluated as three 1D passes over the occupied
// region only. Theta wraps; x and y are zero-padded.
void PoseCellNetwork::convolve_add(const Kernel& kernel, std::vector<double>& field) {
  const Box box = active_box();
  if (box.x0 >= box.x1) return;
  const auto r = static_cast<std::ptrdiff_t>(kernel.radius);
  const auto nt = static_cast<std::ptrdiff_t>(config_.ntheta);
  const double* g = kernel.profile.data() + r;  // g[-r..r]
  auto& A = scratch_a_;
  auto& B = scratch_b_;

  for (std::size_t i = box.x0; i < box.x1; ++i) {
    for (std::size_t j = box.y0; j < box.y1; ++j) {
      const double* in = &field[index(i, j, 0)];
      double* out = &A[index(i, j, 0)];
      for (std::ptrdiff_t k = 0; k < nt; ++k) {
        double s = 0.0;
        for (std::ptrdiff_t c = -r; c <= r; ++c) s += g[c] * in[((k - c) % nt + nt) % nt];
        out[k] = s;
      }
    }
  }

  const auto y0 = static_cast<std::ptrdiff_t>(box.y0);
  const auto y1 = static_cast<std::ptrdiff_t>(box.y1);
  const std::size_t oy0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, y0 - r));
  const std::size_t oy1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(config_.ny), y1 + r));
  for (std::size_t i = box.x0; i < box.x1; ++i) {
    for (std::size_t j = oy0; j < oy1; ++j) {
      double* out = &B[index(i, j, 0)];
      std::fill(out, out + nt, 0.0);
      for (std::ptrdiff_t b = -r; b <= r; ++b) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(j) - b;
        if (src < y0 || src >= y1) continue;
        const double* in = &A[index(i, static_cast<std::size_t>(src), 0)];
        for (std::ptrdiff_t k = 0; k < nt; ++k) out[k] += g[b] * in[k];
      }
    }
  }

  const auto x0 = static_cast<std::ptrdiff_t>(box.x0);
  const auto x1 = static_cast<std::ptrdiff_t>(box.x1);
  const std::size_t ox0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, x0 - r));
  const std::size_t ox1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(config_.nx), x1 + r));
  // Write into A (free again) first so the update reads only the old field.
  for (std::size_t i = ox0; i < ox1; ++i) {
    for (std::size_t j = oy0; j < oy1; ++j) {
      double* out = &A[index(i, j, 0)];
      std::fill(out, out + nt, 0.0);
      for (std::ptrdiff_t a = -r; a <= r; ++a) {
        const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(i) - a;
        if (src < x0 || src >= x1) continue;
        const double* in = &B[index(static_cast<std::size_t>(src), j, 0)];
        for (std::ptrdiff_t k = 0; k < nt; ++k) out[k] += g[a] * in[k];
      }
    }
  }
  for (std::size_t i = ox0; i < ox1; ++i) {
    for (std::size_t j = oy0; j < oy1; ++j) {
      double* dst = &field[index(i, j, 0)];
      const double* add = &A[index(i, j, 0)];
      for (std::ptrdiff_t k = 0; k < nt; ++k) dst[k] += kernel.scale * add[k];
    }
  }
}

void PoseCellNetwork::step_dynamics() {
  convolve_add(exc_, activity_);
  convolve_add(inh_, activity_);
  double sum = 0.0;
  for (double& v : activity_) {
    v = std::max(0.0, v - config_.psi);
    sum += v;
  }
  if (!(sum > 0.0)) throw RuntimeAbort("network extinguished");
  for (double& v : activity_) v /= sum;
}

void PoseCellNetwork::shift_theta(double cells) {
  const auto nt = static_cast<std::ptrdiff_t>(config_.ntheta);
  const double whole = std::floor(cells);
  const double frac = cells - whole;
  const std::ptrdiff_t n = (static_cast<std::ptrdiff_t>(std::fmod(whole, static_cast<double>(nt))) + nt) % nt;
  const Box box = active_box();
  std::vector<double> row(config_.ntheta);
  for (std::size_t i = box.x0; i < box.x1; ++i) {
    for (std::size_t j = box.y0; j < box.y1; ++j) {
      double* p = &activity_[index(i, j, 0)];
      for (std::ptrdiff_t k = 0; k < nt; ++k) {
        const double lo = p[((k - n) % nt + nt) % nt];
        row[static_cast<std::size_t>(k)] =
            frac == 0.0 ? lo : (1.0 - frac) * lo + frac * p[((k - n - 1) % nt + nt) % nt];
      }
      std::copy(row.begin(), row.end(), p);
    }
  }
}

double PoseCellNetwork::shift_xy(double dx_cells, double dy_cells) {
  const Box box = active_box();
  if (box.x0 >= box.x1) return 0.0;
  const double fx_whole = std::floor(dx_cells);
  const double fy_whole = std::floor(dy_cells);
  const double fx = dx_cells - fx_whole;
  const double fy = dy_cells - fy_whole;
  const auto sx = static_cast<std::ptrdiff_t>(fx_whole);
  const auto sy = static_cast<std::ptrdiff_t>(fy_whole);
  const double w[2][2] = {{(1.0 - fx) * (1.0 - fy), (1.0 - fx) * fy}, {fx * (1.0 - fy), fx * fy}};
  const std::size_t nt = config_.ntheta;

  auto& out = scratch_a_;
  std::fill(out.begin(), out.end(), 0.0);
  double lost = 0.0;
  for (std::size_t i = box.x0; i < box.x1; ++i) {
    for (std::size_t j = box.y0; j < box.y1; ++j) {
      const double* src = &activity_[index(i, j, 0)];
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double wt = w[a][b];
          if (wt == 0.0) continue;
          const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(i) + sx + a;
          const std::ptrdiff_t tj = static_cast<std::ptrdiff_t>(j) + sy + b;
          if (ti < 0 || tj < 0 || ti >= static_cast<std::ptrdiff_t>(config_.nx) ||
              tj >= static_cast<std::ptrdiff_t>(config_.ny)) {
            for (std::size_t k = 0; k < nt; ++k) lost += wt * src[k];
            continue;
          }
          double* dst = &out[index(static_cast<std::size_t>(ti), static_cast<std::size_t>(tj), 0)];
          for (std::size_t k = 0; k < nt; ++k) dst[k] += wt * src[k];
        }
      }
    }
  }
  activity_.swap(out);
  return lost;
}

double PoseCellNetwork::path_integrate(double speed_cm_s, double relative_rotation_deg, double dt_ms) {
  if (!(dt_ms > 0.0)) throw ValidationError("path integration needs dt > 0");
  if (!(speed_cm_s >= 0.0) || !std::isfinite(relative_rotation_deg)) {
    throw ValidationError("path integration needs finite rotation and nonnegative speed");
  }
  if (relative_rotation_deg != 0.0) shift_theta(relative_rotation_deg / config_.theta_step_deg());
  const double travel_cm = speed_cm_s * dt_ms / 1000.0;
  if (travel_cm == 0.0) return 0.0;
  const double heading = deg_to_rad(center_of_activation().theta_deg);
  const double lost = shift_xy(travel_cm * std::cos(heading) / config_.cell_size_cm,
                               travel_cm * std::sin(heading) / config_.cell_size_cm);
  if (lost > 0.0) {
    ++truncation_events_;
    truncated_mass_ += lost;
  }
  return lost;
}

PoseEstimate PoseCellNetwork::center_of_activation() const {
  const Box box = active_box();
  if (box.x0 >= box.x1) throw RuntimeAbort("center of activation of an empty network");
  double sum = 0.0, sx = 0.0, sy = 0.0;
  std::vector<double> theta_mass(config_.ntheta, 0.0);
  for (std::size_t i = box.x0; i < box.x1; ++i) {
    for (std::size_t j = box.y0; j < box.y1; ++j) {
      const double* p = &activity_[index(i, j, 0)];
      double cell = 0.0;
      for (std::size_t k = 0; k < config_.ntheta; ++k) {
        cell += p[k];
        theta_mass[k] += p[k];
      }
      sum += cell;
      sx += cell * static_cast<double>(i);
      sy += cell * static_cast<double>(j);
    }
  }
  if (!(sum > 0.0)) throw RuntimeAbort("center of activation of an empty network");
  double sc = 0.0, ss = 0.0;
  for (std::size_t k = 0; k < config_.ntheta; ++k) {
    const double a = deg_to_rad(cell_theta_deg(k));
    sc += theta_mass[k] * std::cos(a);
    ss += theta_mass[k] * std::sin(a);
  }
  PoseEstimate pose;
  pose.position = {config_.origin_cm.x + config_.cell_size_cm * sx / sum,
                   config_.origin_cm.y + config_.cell_size_cm * sy / sum};
  pose.theta_deg = wrap_deg_360(rad_to_deg(std::atan2(ss, sc)));
  return pose;
}

TensorFile PoseCellNetwork::snapshot(std::uint64_t label) const {
  TensorFile t;
  t.dims = {1, static_cast<std::uint32_t>(config_.nx), static_cast<std::uint32_t>(config_.ny),
            static_cast<std::uint32_t>(config_.ntheta)};
  t.labels = {label};
  t.values.reserve(activity_.size());
  for (double v : activity_) t.values.push_back(static_cast<float>(v));
  return t;
}

}  // namespace brainslam
