#pragma once

#include <vector>

#include "obg/morse_system.hpp"

namespace obg {

// One traversal of a Morse chart ball (radius chart_radius). Inside the ball
// the flow is exactly linear, so entry/exit and the closest approach are
// computed in closed form from the chart eigenbasis.
struct ChartPassage {
  int cp = -1;
  double s_entry = 0.0;
  double s_exit = 0.0;      // == s_entry marker when converged
  Vec2 coeff_entry;         // eigenframe coefficients of the displacement at entry
  Vec2 rates;               // d_j(s) = coeff_j * exp(rates_j * (s - s_entry))
  Vec2 lift_offset;         // lifted point = cp.location + lift_offset + displacement
  double closest = 0.0;
  double proj_defect = 0.0;  // growing components dropped by chart_conv_tol
  bool converged = false;
};

enum class OrbitStatus { Converged, TimeLimit, StoppedAtChart };

// Sampled orbit of u' = -X(u) (or +X for backward), on the universal cover
// (coordinates are continuous lifts, not reduced).
struct Orbit {
  const MorseSystem* sys = nullptr;
  bool backward = false;
  std::vector<double> s;     // RK sample times, ascending
  std::vector<Vec2> u;       // lifted points
  std::vector<Vec2> du;      // du/ds at samples
  std::vector<ChartPassage> passages;
  OrbitStatus status = OrbitStatus::TimeLimit;
  int terminal_cp = -1;
  double s_end = 0.0;

  Vec2 eval(double t) const;       // lifted point
  Vec2 eval_deriv(double t) const;
  bool inside_passage(double t, int* which = nullptr) const;
};

struct PropagateOptions {
  bool backward = false;
  double time_limit = Defaults::flow_time_limit;
  bool stop_at_first_chart = false;
  int stop_at_cp = -1;  // stop when entering this chart (after passing others)
  double rel_tol = Defaults::rk_rel_tol;
  double abs_tol = Defaults::rk_abs_tol;
  double max_step = Defaults::rk_max_step;
  // growing chart components below this magnitude are projected away at entry
  // (the orbit is treated as converging); 0 disables the projection
  double chart_conv_tol = 0.0;
};

Orbit propagate(const MorseSystem& sys, const Vec2& start, const PropagateOptions& opt = {});

}  // namespace obg
