#include "brainslam/metrics.hpp"

#include <cmath>

namespace brainslam {

double location_mae(std::span<const Vec2> estimates, std::span<const Vec2> truth) {
  if (estimates.size() != truth.size()) throw ValidationError("location_mae: length mismatch");
  if (estimates.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) sum += distance(estimates[i], truth[i]);
  return sum / static_cast<double>(estimates.size());
}

Vec2 SimilarityFit::apply(Vec2 p) const {
  const double r = deg_to_rad(rotation_deg);
  const double c = std::cos(r), s = std::sin(r);
  return {scale * (c * p.x - s * p.y) + translation.x, scale * (s * p.x + c * p.y) + translation.y};
}

SimilarityFit procrustes_fit(std::span<const Vec2> source, std::span<const Vec2> target) {
  if (source.size() != target.size()) throw ValidationError("procrustes_fit: length mismatch");
  if (source.size() < 3) throw ValidationError("procrustes_fit: need at least 3 points");
  const auto n = static_cast<double>(source.size());
  Vec2 ms, mt;
  for (std::size_t i = 0; i < source.size(); ++i) {
    ms = ms + source[i];
    mt = mt + target[i];
  }
  ms = (1.0 / n) * ms;
  mt = (1.0 / n) * mt;

  double sxx = 0.0, syy = 0.0, sxy = 0.0, dot = 0.0, cross = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec2 a = source[i] - ms;
    const Vec2 b = target[i] - mt;
    sxx += a.x * a.x;
    syy += a.y * a.y;
    sxy += a.x * a.y;
    dot += a.x * b.x + a.y * b.y;
    cross += a.x * b.y - a.y * b.x;
  }
  // Smallest eigenvalue of the source scatter against the largest.
  const double tr = sxx + syy;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (sxx - syy) * (sxx - syy) + sxy * sxy));
  const double lmin = 0.5 * tr - disc;
  const double lmax = 0.5 * tr + disc;
  if (!(lmax > 0.0) || lmin <= 1e-12 * lmax) throw ValidationError("procrustes_fit: degenerate (collinear) source");

  SimilarityFit fit;
  const double theta = std::atan2(cross, dot);
  fit.rotation_deg = rad_to_deg(theta);
  fit.scale = std::hypot(dot, cross) / tr;
  fit.translation = {0.0, 0.0};
  const Vec2 rotated = fit.apply(ms);
  fit.translation = mt - rotated;
  double sq = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Vec2 d = fit.apply(source[i]) - target[i];
    sq += d.x * d.x + d.y * d.y;
  }
  fit.rmse_cm = std::sqrt(sq / n);
  return fit;
}

}  // namespace brainslam
