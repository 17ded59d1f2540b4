#pragma once

// Numerical defaults shared across modules. Every tolerance that a test
// asserts against lives here so the value used and the value tested are
// the same object.

namespace obg {

struct Defaults {
  // morse_system
  static constexpr double mollify_radius = 0.35;
  static constexpr double blend_width = 0.10;
  static constexpr double newton_tol = 1e-12;
  static constexpr int newton_max_iter = 50;
  static constexpr double merge_radius = 1e-8;
  static constexpr double min_abs_eigenvalue = 1e-6;
  static constexpr double hess_degenerate_det = 1e-8;
  static constexpr int grid_n = 64;

  // flowline
  static constexpr double seed_offset = 1e-6;
  static constexpr double rk_rel_tol = 1e-10;
  static constexpr double rk_abs_tol = 1e-13;
  static constexpr double rk_max_step = 0.02;
  static constexpr double flow_time_limit = 300.0;
  static constexpr double sample_ds = 0.01;
  static constexpr double window_L = 25.0;
  static constexpr int unstable_circle_count = 720;
  static constexpr int bisect_depth = 60;
  static constexpr double tail_fit_tol = 1e-6;
  static constexpr double entry_defect_tol = 1e-9;

  // linear_analysis
  static constexpr double principal_angle_tol = 1e-6;
  static constexpr double principal_angle_warn = 1e-3;

  // obg_zero
  static constexpr int profile_A = 4;
  static constexpr double profile_h = 0.6;
  static constexpr double profile_gamma = 0.1;
  static constexpr double degenerate_pairing = 1e-8;
  static constexpr double slice_zero_tol = 1e-10;
  static constexpr double slice_margin = 2.0;  // r: minimum R0^- on a slice
  static constexpr double oracle_tol = 0.05;
  static constexpr double default_R0 = 24.0;

  // deformation
  static constexpr double deform_ds = 0.005;
  static constexpr double deform_margin = 12.0;
  static constexpr double contraction_ball = 1e-2;
  static constexpr double fixed_point_tol = 1e-12;
  static constexpr int fixed_point_max_iter = 200;

  // obg_t
  static constexpr double bump_radius = 0.3;
  static constexpr double bump_amplitude = 1.0;
  static constexpr double tube_width = 0.1;
  static constexpr double t_envelope = 0.05;
};

}  // namespace obg
