#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace obg {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

// Flat periodic 2-D chart [0,P1) x [0,P2). With the flat metric the
// exponential map is plain vector addition, so tangent vectors and chart
// displacements can be mixed freely.
struct DomainSpec {
  Vec2 periods{2.0 * M_PI, 2.0 * M_PI};
  std::string name{"flat_torus"};

  DomainSpec() = default;
  DomainSpec(double p1, double p2, std::string n = "flat_torus")
      : periods(p1, p2), name(std::move(n)) {
    if (p1 <= 0.0 || p2 <= 0.0) throw std::invalid_argument("DomainSpec: periods must be positive");
  }

  // reduce a point into the fundamental domain [0,P1) x [0,P2)
  Vec2 reduce(const Vec2& p) const {
    Vec2 q;
    for (int i = 0; i < 2; ++i) {
      q[i] = std::fmod(p[i], periods[i]);
      if (q[i] < 0.0) q[i] += periods[i];
    }
    return q;
  }

  // shortest displacement from a to b, components in [-P/2, P/2)
  Vec2 delta(const Vec2& a, const Vec2& b) const {
    Vec2 d;
    for (int i = 0; i < 2; ++i) {
      d[i] = std::remainder(b[i] - a[i], periods[i]);
    }
    return d;
  }

  double dist(const Vec2& a, const Vec2& b) const { return delta(a, b).norm(); }
};

// C^2 bump profile 6t^5 - 15t^4 + 10t^3 clamped to [0,1]; also the base
// cutoff beta (non-decreasing, 0 for t<=0, 1 for t>=1).
inline double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

inline double smoothstep_d1(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return t * t * (30.0 + t * (-60.0 + 30.0 * t));
}

inline double smoothstep_d2(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  return t * (60.0 + t * (-180.0 + 120.0 * t));
}

}  // namespace obg
