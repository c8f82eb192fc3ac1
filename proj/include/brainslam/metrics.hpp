#pragma once

#include <span>
#include <vector>

#include "brainslam/common.hpp"

namespace brainslam {

/// Mean Euclidean distance between aligned series.
double location_mae(std::span<const Vec2> estimates, std::span<const Vec2> truth);

/// target ~ scale * R(rotation) * source + translation, least squares.
struct SimilarityFit {
  double scale = 1.0;
  double rotation_deg = 0.0;
  Vec2 translation;
  double rmse_cm = 0.0;  // after alignment

  Vec2 apply(Vec2 p) const;
};

/// Closed-form 2D similarity (Umeyama) fit without reflection. Throws
/// ValidationError for fewer than 3 points or collinear sources.
SimilarityFit procrustes_fit(std::span<const Vec2> source, std::span<const Vec2> target);

}  // namespace brainslam
