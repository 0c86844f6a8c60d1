#pragma once

#include <cmath>

namespace gridtune {

// A d/q pair in some rotating reference frame.
struct Vec2 {
  double d = 0.0;
  double q = 0.0;

  Vec2 operator+(const Vec2& o) const { return {d + o.d, q + o.q}; }
  Vec2 operator-(const Vec2& o) const { return {d - o.d, q - o.q}; }
  Vec2 operator*(double s) const { return {d * s, q * s}; }
  Vec2& operator+=(const Vec2& o) {
    d += o.d;
    q += o.q;
    return *this;
  }
  double norm() const { return std::sqrt(d * d + q * q); }
};

// Rotates a vector by +theta (use -theta to go from the global frame into a
// local frame whose d axis leads the global one by theta).
inline Vec2 rotate(const Vec2& v, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * v.d - s * v.q, c * v.q + s * v.d};
}

// Scales a vector down so its magnitude does not exceed limit.
inline Vec2 clamp_norm(const Vec2& v, double limit) {
  const double n = v.norm();
  if (n <= limit || n == 0.0) return v;
  return v * (limit / n);
}

// Instantaneous active power, generator convention: positive means the
// current flows out of the measured device into the bus.
inline double active_power(const Vec2& v, const Vec2& i) {
  return v.d * i.d + v.q * i.q;
}

// Reactive power, same convention.
inline double reactive_power(const Vec2& v, const Vec2& i) {
  return v.q * i.d - v.d * i.q;
}

}  // namespace gridtune
