#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace brainslam {

// Input rejected before any work was done (CLI exit code 1).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Malformed file contents; the message names the offending line.
class ParseError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A run that started but could not continue (CLI exit code 2).
class RuntimeAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

constexpr double kPi = std::numbers::pi;

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Wraps into [0, 360).
inline double wrap_deg_360(double deg) {
  double w = std::fmod(deg, 360.0);
  if (w < 0.0) w += 360.0;
  if (w >= 360.0) w -= 360.0;
  return w;
}

// Minimal signed difference a - b, in (-180, 180].
inline double signed_angle_diff_deg(double a, double b) {
  double d = wrap_deg_360(a - b);
  return d > 180.0 ? d - 360.0 : d;
}

inline double abs_angle_diff_deg(double a, double b) {
  return std::abs(signed_angle_diff_deg(a, b));
}

}  // namespace brainslam
