#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obg/domain.hpp"
#include "obg/params.hpp"

namespace obg {

struct CriticalPoint {
  Vec2 location;                 // chart coordinates, reduced
  double value = 0.0;            // f at the point
  int index = 0;                 // number of negative Hessian eigenvalues
  Vec2 eigenvalues;              // sorted ascending
  Mat2 eigenvectors;             // columns match eigenvalue order, orthonormal
  double chart_radius = 0.0;     // = mollify_radius - blend_width
};

// Localized gradient perturbation V(p) = amplitude * bump(|p-center|/radius) * direction.
// Realizes the first-order term of the metric family: field = grad f + t V.
struct GradientPerturbation {
  Vec2 center{0, 0};
  double radius = Defaults::bump_radius;
  double amplitude = Defaults::bump_amplitude;
  Vec2 direction{1, 0};  // unit

  Vec2 value(const DomainSpec& dom, const Vec2& p) const;
  Mat2 jacobian(const DomainSpec& dom, const Vec2& p) const;
};

struct EvalResult {
  double f;
  Vec2 grad;
  Mat2 hess;
};

// Morse function on a flat periodic chart, mollified to be exactly quadratic
// inside radius (mollify_radius - blend_width) of every critical point and
// blended back to the analytic family over the annulus of width blend_width.
// Immutable after construction; all evaluators are pure.
class MorseSystem {
 public:
  DomainSpec domain;
  std::string family;
  std::map<std::string, double> params;
  double mollify_radius = Defaults::mollify_radius;
  double blend_width = Defaults::blend_width;
  std::vector<CriticalPoint> critical_points;  // sorted by descending f

  // optional gradient perturbation (family flat_torus_perturbed); the flow
  // field becomes grad f + t V while f itself is unchanged
  std::optional<GradientPerturbation> perturbation;
  double perturbation_t = 0.0;

  double chart_radius() const { return mollify_radius - blend_width; }

  // mollified f, grad f, Hess f
  EvalResult evaluate(const Vec2& p) const;

  // flow field X with u' = -X(u); equals grad f plus the perturbation term
  Vec2 field(const Vec2& p) const;
  Mat2 field_jacobian(const Vec2& p) const;

  // index of the critical point whose mollification ball contains p (within
  // radius mollify_radius), or -1
  int ball_of(const Vec2& p) const;
  // index of the critical point whose Morse chart contains p (within
  // chart_radius), or -1
  int chart_of(const Vec2& p) const;

  const CriticalPoint& cp(int i) const { return critical_points.at(static_cast<size_t>(i)); }
  int cp_near(const Vec2& p, double tol = 1e-6) const;

  // analytic (unmollified) family evaluators
  double f_raw(const Vec2& p) const;
  Vec2 grad_raw(const Vec2& p) const;
  Mat2 hess_raw(const Vec2& p) const;
};

// family in {flat_torus_height, flat_torus_perturbed}; flat_torus_height
// takes {R, r} with R > r > 0; flat_torus_perturbed adds
// {t, center_theta, center_phi, radius, amplitude, dir_theta, dir_phi}
MorseSystem build_builtin(const std::string& family, const std::map<std::string, double>& params,
                          double mollify_radius = Defaults::mollify_radius,
                          double blend_width = Defaults::blend_width);

// Newton iteration on grad f = 0 from grid seeds; duplicates merged within
// Defaults::merge_radius; classified by Hessian eigendecomposition; sorted by
// descending f-value. Throws if a converged point is numerically non-Morse.
std::vector<CriticalPoint> find_critical_points(const MorseSystem& sys,
                                                int grid_n = Defaults::grid_n);

}  // namespace obg
