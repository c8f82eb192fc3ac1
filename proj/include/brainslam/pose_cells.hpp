#pragma once

#include <cstdint>
#include <vector>

#include "brainslam/common.hpp"
#include "brainslam/maze.hpp"
#include "brainslam/tensor_io.hpp"

namespace brainslam {

enum class KernelSign { excitatory, inhibitory };

/// Cube-truncated 3D Gaussian. Because the cube truncation keeps the kernel
/// separable, weight(a, b, c) = scale * profile[a] * profile[b] * profile[c].
struct Kernel {
  KernelSign sign = KernelSign::excitatory;
  double variance = 1.0;
  int radius = 3;
  std::vector<double> profile;  // exp(-d^2 / 2v) for d in [-radius, radius]
  double scale = 0.0;
  std::vector<double> weights;  // [a][b][c], side 2 * radius + 1

  int side() const { return 2 * radius + 1; }
  double weight(int a, int b, int c) const {
    return weights[(static_cast<std::size_t>(a + radius) * side() + static_cast<std::size_t>(b + radius)) * side() +
                   static_cast<std::size_t>(c + radius)];
  }
  double sum() const;
};

/// Excitatory kernels sum to +1, inhibitory kernels to -inhibitory_amplitude.
Kernel build_kernel(double variance, int radius, KernelSign sign, double inhibitory_amplitude = 0.4);

struct PoseEstimate {
  Vec2 position;
  double theta_deg = 0.0;
};

struct PoseCellConfig {
  // 240 cm square: the 130 x 170 cm maze stays clear of the x,y borders, and
  // 4 cm cells keep the per-step shift at walking speed near 0.2 cells.
  std::size_t nx = 60;
  std::size_t ny = 60;
  std::size_t ntheta = 36;
  double cell_size_cm = 4.0;
  Vec2 origin_cm{-53.0, -33.0};  // centre of cell (0, 0); default centres the grid on the maze
  double psi = 2e-5;             // global inhibition
  double exc_variance = 1.0;
  int exc_radius = 3;
  double inh_variance = 2.0;
  int inh_radius = 4;
  double inh_amplitude = 0.4;
  double inject_variance = 1.0;
  int inject_radius = 3;

  double theta_step_deg() const { return 360.0 / static_cast<double>(ntheta); }
};

/// Shifts `config.origin_cm` so the grid is centred on the maze bounding box.
PoseCellConfig centred_on(const MazeSkeleton& maze, PoseCellConfig config);

class PoseCellNetwork {
 public:
  explicit PoseCellNetwork(const PoseCellConfig& config);

  const PoseCellConfig& config() const { return config_; }
  const Kernel& excitatory_kernel() const { return exc_; }
  const Kernel& inhibitory_kernel() const { return inh_; }

  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * config_.ny + j) * config_.ntheta + k;
  }
  double at(std::size_t i, std::size_t j, std::size_t k) const { return activity_[index(i, j, k)]; }
  const std::vector<double>& activity() const { return activity_; }
  void set_activity(std::vector<double> activity);
  double total() const;

  Vec2 cell_position(std::size_t i, std::size_t j) const;
  double cell_theta_deg(std::size_t k) const;

  /// Adds energy times a unit-sum Gaussian packet at the cell nearest `pose`.
  /// Mass falling off the x,y borders is dropped. Throws ValidationError when
  /// the pose lies outside the grid.
  void inject(const PoseEstimate& pose, double energy);

  /// Excitation, inhibition, global inhibition, normalisation. Throws
  /// RuntimeAbort("network extinguished") when nothing survives.
  void step_dynamics();

  /// Shifts the packet by the rotation along theta, then by speed * dt along
  /// the heading read back from the shifted network. Fractional shifts split
  /// mass linearly between neighbours. Returns the mass lost over x,y borders.
  double path_integrate(double speed_cm_s, double relative_rotation_deg, double dt_ms);

  PoseEstimate center_of_activation() const;

  std::uint64_t border_truncation_events() const { return truncation_events_; }
  double border_truncated_mass() const { return truncated_mass_; }

  /// dims (1, nx, ny, ntheta), one label.
  TensorFile snapshot(std::uint64_t label) const;

 private:
  struct Box {
    std::size_t x0, x1, y0, y1;  // half-open
  };
  Box active_box() const;
  void convolve_add(const Kernel& kernel, std::vector<double>& field);
  void shift_theta(double cells);
  double shift_xy(double dx_cells, double dy_cells);

  PoseCellConfig config_;
  Kernel exc_;
  Kernel inh_;
  Kernel packet_;
  std::vector<double> activity_;
  std::vector<double> scratch_a_;
  std::vector<double> scratch_b_;
  std::uint64_t truncation_events_ = 0;
  double truncated_mass_ = 0.0;
};

}  // namespace brainslam
