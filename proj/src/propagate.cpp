#include "obg/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace obg {

namespace {

// Dormand-Prince 5(4) coefficients
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

struct Cubic {
  // Hermite interpolation on [0, h]
  Vec2 y0, y1, d0, d1;
  double h;
  Vec2 at(double t) const {
    double x = t / h;
    double h00 = (1 + 2 * x) * (1 - x) * (1 - x);
    double h10 = x * (1 - x) * (1 - x);
    double h01 = x * x * (3 - 2 * x);
    double h11 = x * x * (x - 1);
    return h00 * y0 + (h10 * h) * d0 + h01 * y1 + (h11 * h) * d1;
  }
};

// exit analysis of the linear flow d_j(t) = c_j exp(r_j t) from the sphere |d| = R
struct ChartExit {
  bool converges = false;
  double t_exit = 0.0;
  double closest = 0.0;
  Vec2 coeff_exit;
};

ChartExit solve_chart_exit(const Vec2& c, const Vec2& r, double R, double budget) {
  auto F = [&](double t) {
    return c[0] * c[0] * std::exp(2 * r[0] * t) + c[1] * c[1] * std::exp(2 * r[1] * t) - R * R;
  };
  auto Fp = [&](double t) {
    return 2 * r[0] * c[0] * c[0] * std::exp(2 * r[0] * t) +
           2 * r[1] * c[1] * c[1] * std::exp(2 * r[1] * t);
  };
  ChartExit out;
  bool grows = (r[0] > 0 && std::abs(c[0]) > 0) || (r[1] > 0 && std::abs(c[1]) > 0);
  if (!grows) {
    out.converges = true;
    out.closest = 0.0;
    return out;
  }
  // F is convex; locate its minimum, then the exit root to its right
  double tmin = 0.0;
  if (Fp(0.0) < 0.0) {
    double lo = 0.0, hi = 1.0;
    while (Fp(hi) < 0.0 && hi < 2e3) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
      tmin = 0.5 * (lo + hi);
      (Fp(tmin) < 0.0 ? lo : hi) = tmin;
    }
    tmin = 0.5 * (lo + hi);
  }
  double Fmin = F(tmin);
  out.closest = std::sqrt(std::max(Fmin + R * R, 0.0));
  if (tmin > budget) {  // cannot leave within the remaining time budget
    out.converges = true;
    return out;
  }
  double lo = tmin, hi = std::max(2.0 * tmin, 1.0);
  while (F(hi) < 0.0) {
    hi *= 2.0;
    if (hi > 1e7) {
      out.converges = true;
      return out;
    }
  }
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (F(mid) < 0.0 ? lo : hi) = mid;
  }
  out.t_exit = 0.5 * (lo + hi);
  if (out.t_exit > budget) {
    out.converges = true;
    return out;
  }
  out.coeff_exit = {c[0] * std::exp(r[0] * out.t_exit), c[1] * std::exp(r[1] * out.t_exit)};
  return out;
}

}  // namespace

bool Orbit::inside_passage(double t, int* which) const {
  for (size_t i = 0; i < passages.size(); ++i) {
    const ChartPassage& p = passages[i];
    double hi = p.converged ? s_end : p.s_exit;
    if (t >= p.s_entry && t <= hi) {
      if (which) *which = static_cast<int>(i);
      return true;
    }
  }
  return false;
}

Vec2 Orbit::eval(double t) const {
  int pi = -1;
  if (inside_passage(t, &pi)) {
    const ChartPassage& p = passages[static_cast<size_t>(pi)];
    const CriticalPoint& c = sys->cp(p.cp);
    double dt = t - p.s_entry;
    Vec2 coeff(p.coeff_entry[0] * std::exp(p.rates[0] * dt),
               p.coeff_entry[1] * std::exp(p.rates[1] * dt));
    return c.location + p.lift_offset + c.eigenvectors * coeff;
  }
  if (s.empty()) throw std::runtime_error("Orbit::eval: empty orbit");
  if (t <= s.front()) return u.front() + (t - s.front()) * du.front();
  if (t >= s.back()) return u.back() + (t - s.back()) * du.back();
  auto it = std::upper_bound(s.begin(), s.end(), t);
  size_t k = static_cast<size_t>(it - s.begin()) - 1;
  // samples adjacent to a passage may straddle it; clamp to the nearer side
  if (k + 1 >= s.size()) k = s.size() - 2;
  Cubic cub{u[k], u[k + 1], du[k], du[k + 1], s[k + 1] - s[k]};
  return cub.at(t - s[k]);
}

Vec2 Orbit::eval_deriv(double t) const {
  int pi = -1;
  if (inside_passage(t, &pi)) {
    const ChartPassage& p = passages[static_cast<size_t>(pi)];
    const CriticalPoint& c = sys->cp(p.cp);
    double dt = t - p.s_entry;
    Vec2 coeff(p.rates[0] * p.coeff_entry[0] * std::exp(p.rates[0] * dt),
               p.rates[1] * p.coeff_entry[1] * std::exp(p.rates[1] * dt));
    return c.eigenvectors * coeff;
  }
  double h = 1e-7;
  return (eval(t + h) - eval(t - h)) / (2.0 * h);
}

Orbit propagate(const MorseSystem& sys, const Vec2& start, const PropagateOptions& opt) {
  Orbit orb;
  orb.sys = &sys;
  orb.backward = opt.backward;
  const double sign = opt.backward ? 1.0 : -1.0;
  auto rhs = [&](const Vec2& p) { return sign * sys.field(sys.domain.reduce(p)); };

  Vec2 y = start;
  double t = 0.0;
  double h = 1e-4;
  Vec2 k1 = rhs(y);

  auto push_sample = [&](double tt, const Vec2& yy, const Vec2& dd) {
    orb.s.push_back(tt);
    orb.u.push_back(yy);
    orb.du.push_back(dd);
  };

  // handle a chart entry at lifted point `pe`, time `te`; returns false when
  // the orbit terminates there
  auto handle_chart = [&](int ci, double te, const Vec2& pe, double& tref, Vec2& yref) -> bool {
    const CriticalPoint& c = sys.cp(ci);
    Vec2 red = sys.domain.reduce(pe);
    Vec2 d = sys.domain.delta(c.location, red);
    ChartPassage pass;
    pass.cp = ci;
    pass.s_entry = te;
    pass.lift_offset = (pe - d) - c.location;  // lift of the critical point seen by this passage
    pass.coeff_entry = c.eigenvectors.transpose() * d;
    pass.rates = sign * c.eigenvalues;  // forward: d' = -H d
    for (int j = 0; j < 2; ++j) {
      if (pass.rates[j] > 0 && std::abs(pass.coeff_entry[j]) < opt.chart_conv_tol) {
        pass.proj_defect += std::abs(pass.coeff_entry[j]);
        pass.coeff_entry[j] = 0.0;
      }
    }
    ChartExit ex = solve_chart_exit(pass.coeff_entry, pass.rates, c.chart_radius,
                                    opt.time_limit - te);
    pass.closest = ex.closest;
    if (ex.converges) {
      pass.converged = true;
      pass.s_exit = te;
      orb.passages.push_back(pass);
      orb.status = OrbitStatus::Converged;
      orb.terminal_cp = ci;
      orb.s_end = opt.time_limit;
      return false;
    }
    pass.s_exit = te + ex.t_exit;
    orb.passages.push_back(pass);
    if (opt.stop_at_first_chart || ci == opt.stop_at_cp) {
      orb.status = OrbitStatus::StoppedAtChart;
      orb.terminal_cp = ci;
      orb.s_end = te;
      return false;
    }
    // resume outside the chart
    tref = pass.s_exit;
    Vec2 dx = c.eigenvectors * ex.coeff_exit;
    yref = c.location + pass.lift_offset + dx;
    return true;
  };

  // the seed may start inside a chart
  {
    Vec2 red = sys.domain.reduce(y);
    int ci = sys.chart_of(red);
    if (ci >= 0) {
      if (!handle_chart(ci, t, y, t, y)) return orb;
      k1 = rhs(y);
    }
  }
  push_sample(t, y, k1);

  const int max_steps = 4000000;
  for (int step = 0; step < max_steps; ++step) {
    if (t >= opt.time_limit) {
      orb.status = OrbitStatus::TimeLimit;
      orb.s_end = t;
      return orb;
    }
    h = std::min({h, opt.max_step, opt.time_limit - t});
    Vec2 k2 = rhs(y + h * (a21 * k1));
    Vec2 k3 = rhs(y + h * (a31 * k1 + a32 * k2));
    Vec2 k4 = rhs(y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    Vec2 k5 = rhs(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    Vec2 k6 = rhs(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    Vec2 ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    Vec2 k7 = rhs(ynew);
    Vec2 errv = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double sc = opt.abs_tol + opt.rel_tol * std::max(y.norm(), ynew.norm());
    double err = errv.norm() / sc;
    if (err > 1.0 && h > 1e-12) {
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    // chart entry inside the accepted step?
    Vec2 red = sys.domain.reduce(ynew);
    int ci = sys.chart_of(red);
    if (ci >= 0) {
      const CriticalPoint& c = sys.cp(ci);
      Cubic cub{y, ynew, k1, k7, h};
      double lo = 0.0, hi = h;
      for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        double dd = sys.domain.dist(sys.domain.reduce(cub.at(mid)), c.location);
        (dd > c.chart_radius ? lo : hi) = mid;
      }
      double te = t + hi;
      Vec2 pe = cub.at(hi);
      // snap onto the sphere radially
      Vec2 redp = sys.domain.reduce(pe);
      Vec2 d = sys.domain.delta(c.location, redp);
      pe += d * (c.chart_radius / d.norm() - 1.0);
      push_sample(te, pe, rhs(pe));
      if (!handle_chart(ci, te, pe, t, y)) return orb;
      k1 = rhs(y);
      push_sample(t, y, k1);
      h = 1e-4;
      continue;
    }

    t += h;
    y = ynew;
    k1 = k7;
    push_sample(t, y, k1);
    h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
  }
  throw std::runtime_error("propagate: step budget exhausted");
}

}  // namespace obg
