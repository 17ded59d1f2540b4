#pragma once

#include <string>
#include <vector>

#include "obg/propagate.hpp"

namespace obg {

struct TailData {
  double rate = 0.0;     // signed Hessian eigenvalue governing the tail
  Vec2 coefficient;      // eigenframe components of the s=0-normalized coefficient
  double fit_residual = 0.0;
};

// Heteroclinic orbit with the standardized parametrization: the orbit enters
// the target chart at s = +1 and lies in the source chart for s <= -1.
// Samples are uniform on [-L, L]; beyond the chart-entry times the curve is
// the closed-form linear flow, with coefficients normalized at s = 0:
//   s >= target_entry: u(s) = x_tgt + sum_j tgt_coeff_j exp(-lambda_j s) v_j
//   s <= source_exit:  u(s) = x_src + sum_j src_coeff_j exp(-lambda_j s) v_j
struct Flowline {
  const MorseSystem* sys = nullptr;
  int source = -1, target = -1;
  double ds = Defaults::sample_ds;
  double L = Defaults::window_L;
  std::vector<Vec2> samples;  // lifted coordinates
  double source_exit = 0.0;   // <= -1 after standardization
  double target_entry = 1.0;  // == +1 after standardization
  Vec2 src_coeff, tgt_coeff;  // eigenframe, only decaying components nonzero
  Vec2 src_lift, tgt_lift;    // lifts of the endpoint critical points
  TailData tail_source, tail_target;
  std::string side_label;
  double entry_defect = 0.0;  // unstable remainder discarded at target entry
  double seed_angle = 0.0;    // seed datum on the unstable sphere (diagnostics)

  double s_min() const { return -L; }
  double s_max() const { return L; }
  size_t n_samples() const { return samples.size(); }
  double s_at(size_t k) const { return -L + static_cast<double>(k) * ds; }

  Vec2 eval(double s) const;        // lifted
  Vec2 eval_deriv(double s) const;  // du/ds
  Vec2 point(double s) const { return sys->domain.reduce(eval(s)); }
  Mat2 hessian_along(double s) const { return sys->evaluate(point(s)).hess; }

  const CriticalPoint& src_cp() const { return sys->cp(source); }
  const CriticalPoint& tgt_cp() const { return sys->cp(target); }
};

// one-parameter family of connections from an index-2 source (angle interval)
struct ConnectionFamily {
  double angle_lo = 0.0, angle_hi = 0.0;
  std::vector<Flowline> representatives;
};

struct ConnectionSet {
  std::vector<Flowline> isolated;       // index difference 1
  std::vector<ConnectionFamily> families;  // index difference 2
};

std::vector<Vec2> unstable_manifold_directions(const CriticalPoint& cp,
                                               int count = Defaults::unstable_circle_count);

// Orbit from `start`, forward or backward, stopping at chart entry or after
// the time limit. Throws std::runtime_error("nonconvergent orbit") when the
// time limit is hit first; the partial orbit is in the exception message's
// wake (use propagate directly when partial data is needed).
Orbit integrate_flowline(const MorseSystem& sys, const Vec2& start, bool backward,
                         bool stop_at_chart, double time_limit = Defaults::flow_time_limit);

// Build a standardized flowline from a forward orbit seeded inside the source
// chart and converging into the target chart.
Flowline standardize_forward_orbit(const MorseSystem& sys, const Orbit& orbit, int source,
                                   int target, double L = Defaults::window_L,
                                   double ds = Defaults::sample_ds);

// Same from a backward orbit seeded inside the (forward) target chart.
Flowline standardize_backward_orbit(const MorseSystem& sys, const Orbit& orbit, int source,
                                    int target, double L = Defaults::window_L,
                                    double ds = Defaults::sample_ds);

// Re-standardize with a different window; idempotent for equal L, ds.
Flowline standardize(const Flowline& fl, double L = Defaults::window_L,
                     double ds = Defaults::sample_ds);

// Read a tail off the stored samples at two chart times and check consistency
// at a third; end = false reads the source end.
TailData fit_tail(const Flowline& fl, bool target_end);

// All connections source -> target. Index-1 sources shoot their two unstable
// rays; (2,1) pairs shoot the target's stable rays backward; (2,0) pairs are
// scanned over the unstable circle and reported as angle families.
ConnectionSet find_connections(const MorseSystem& sys, int source, int target);

// convenience: the six isolated torus connections keyed by role
struct TorusConnections {
  Flowline u_minus_front, u_minus_back;  // max -> saddle x0
  Flowline u0_left, u0_right;            // x0 -> x1
  Flowline u_plus_front, u_plus_back;    // x1 -> min
  int i_max, i_x0, i_x1, i_min;
};
TorusConnections torus_connections(const MorseSystem& sys);

}  // namespace obg
