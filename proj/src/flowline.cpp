#include "obg/flowline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace obg {

namespace {

Vec2 tail_eval(const Vec2& lift, const Mat2& E, const Vec2& lam, const Vec2& coeff, double s) {
  Vec2 c(coeff[0] * std::exp(-lam[0] * s), coeff[1] * std::exp(-lam[1] * s));
  return lift + E * c;
}

// label torus connections: front/back from the theta side of the midpoint,
// left/right from the phi side for the saddle-saddle locus
std::string torus_side_label(const Flowline& fl) {
  if (fl.sys->family.rfind("flat_torus", 0) != 0) return "";
  Vec2 p = fl.point(0.0);
  if (fl.src_cp().index == 1 && fl.tgt_cp().index == 1) {
    double phi = std::remainder(p[1], 2.0 * M_PI);
    return std::abs(phi) < M_PI / 2 ? "right" : "left";
  }
  double th = std::fmod(p[0], 2.0 * M_PI);
  if (th < 0) th += 2.0 * M_PI;
  return th < M_PI ? "front" : "back";
}

const ChartPassage* find_seed_passage(const Orbit& o, int cp) {
  if (o.passages.empty() || o.passages.front().cp != cp || o.passages.front().s_entry != 0.0)
    return nullptr;
  return &o.passages.front();
}

const ChartPassage* find_terminal_passage(const Orbit& o, int cp) {
  if (o.passages.empty()) return nullptr;
  const ChartPassage& p = o.passages.back();
  if (p.cp != cp) return nullptr;
  if (!(p.converged || o.status == OrbitStatus::StoppedAtChart)) return nullptr;
  return &p;
}

}  // namespace

Vec2 Flowline::eval(double s) const {
  const CriticalPoint& ct = tgt_cp();
  const CriticalPoint& cs = src_cp();
  if (s >= target_entry) return tail_eval(tgt_lift, ct.eigenvectors, ct.eigenvalues, tgt_coeff, s);
  if (s <= source_exit) return tail_eval(src_lift, cs.eigenvectors, cs.eigenvalues, src_coeff, s);
  // cubic Lagrange interpolation on the uniform grid
  double x = (s + L) / ds;
  long k = std::lround(std::floor(x));
  k = std::clamp(k, 1L, static_cast<long>(samples.size()) - 3L);
  double u0 = x - static_cast<double>(k);  // in [0,1] generally
  const Vec2 &pm1 = samples[k - 1], &p0 = samples[k], &p1 = samples[k + 1], &p2 = samples[k + 2];
  double t = u0;
  double w0 = -t * (t - 1) * (t - 2) / 6.0;
  double w1 = (t + 1) * (t - 1) * (t - 2) / 2.0;
  double w2 = -(t + 1) * t * (t - 2) / 2.0;
  double w3 = (t + 1) * t * (t - 1) / 6.0;
  return w0 * pm1 + w1 * p0 + w2 * p1 + w3 * p2;
}

Vec2 Flowline::eval_deriv(double s) const {
  // flowlines satisfy u' = -X(u) everywhere, including the analytic tails
  return -sys->field(point(s));
}

std::vector<Vec2> unstable_manifold_directions(const CriticalPoint& cp, int count) {
  if (cp.index == 0) throw std::invalid_argument("no unstable directions");
  if (cp.index == 1) {
    Vec2 v = cp.eigenvectors.col(0);  // negative eigenvalue
    return {v, -v};
  }
  std::vector<Vec2> dirs;
  dirs.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    double a = 2.0 * M_PI * i / count;
    dirs.emplace_back(std::cos(a), std::sin(a));
  }
  return dirs;
}

Orbit integrate_flowline(const MorseSystem& sys, const Vec2& start, bool backward,
                         bool stop_at_chart, double time_limit) {
  if (sys.cp_near(start, 1e-10) >= 0)
    throw std::invalid_argument("integrate_flowline: start is a critical point");
  PropagateOptions opt;
  opt.backward = backward;
  opt.stop_at_first_chart = stop_at_chart;
  opt.time_limit = time_limit;
  Orbit o = propagate(sys, start, opt);
  if (o.status == OrbitStatus::TimeLimit)
    throw std::runtime_error("nonconvergent orbit: time limit without chart entry");
  return o;
}

Flowline standardize_forward_orbit(const MorseSystem& sys, const Orbit& orbit, int source,
                                   int target, double L, double ds) {
  const ChartPassage* sp = find_seed_passage(orbit, source);
  const ChartPassage* tp = find_terminal_passage(orbit, target);
  if (!sp || !tp) throw std::runtime_error("standardize: orbit endpoints not inside charts");

  Flowline fl;
  fl.sys = &sys;
  fl.source = source;
  fl.target = target;
  fl.L = L;
  fl.ds = ds;
  double shift = 1.0 - tp->s_entry;
  fl.source_exit = sp->s_exit + shift;
  fl.target_entry = 1.0;
  if (fl.source_exit > -1.0) {
    std::ostringstream os;
    os << "standardize: segment too short, source chart exit at s=" << fl.source_exit
       << " > -1; increase L or move seeds closer";
    throw std::runtime_error(os.str());
  }
  if (fl.source_exit < -L + 2 * ds) throw std::runtime_error("standardize: window too small");

  const CriticalPoint& cs = sys.cp(source);
  const CriticalPoint& ct = sys.cp(target);
  fl.src_lift = cs.location + sp->lift_offset;
  fl.tgt_lift = ct.location + tp->lift_offset;

  fl.entry_defect = 0.0;
  for (int j = 0; j < 2; ++j) {
    double ls = cs.eigenvalues[j], lt = ct.eigenvalues[j];
    fl.src_coeff[j] = ls < 0 ? sp->coeff_entry[j] * std::exp(ls * shift) : 0.0;
    if (ls > 0) fl.entry_defect += std::abs(sp->coeff_entry[j]);
    fl.tgt_coeff[j] = lt > 0 ? tp->coeff_entry[j] * std::exp(lt * 1.0) : 0.0;
    if (lt < 0) fl.entry_defect += std::abs(tp->coeff_entry[j]);
  }

  size_t n = static_cast<size_t>(std::lround(2.0 * L / ds)) + 1;
  fl.samples.resize(n);
  for (size_t k = 0; k < n; ++k) {
    double s = -L + static_cast<double>(k) * ds;
    if (s >= fl.target_entry)
      fl.samples[k] = tail_eval(fl.tgt_lift, ct.eigenvectors, ct.eigenvalues, fl.tgt_coeff, s);
    else if (s <= fl.source_exit)
      fl.samples[k] = tail_eval(fl.src_lift, cs.eigenvectors, cs.eigenvalues, fl.src_coeff, s);
    else
      fl.samples[k] = orbit.eval(s - shift);
  }
  fl.tail_source = fit_tail(fl, false);
  fl.tail_target = fit_tail(fl, true);
  fl.side_label = torus_side_label(fl);
  return fl;
}

Flowline standardize_backward_orbit(const MorseSystem& sys, const Orbit& orbit, int source,
                                    int target, double L, double ds) {
  const ChartPassage* sp = find_seed_passage(orbit, target);
  const ChartPassage* tm = find_terminal_passage(orbit, source);
  if (!sp || !tm) throw std::runtime_error("standardize: orbit endpoints not inside charts");

  Flowline fl;
  fl.sys = &sys;
  fl.source = source;
  fl.target = target;
  fl.L = L;
  fl.ds = ds;
  double shift = 1.0 + sp->s_exit;  // forward s = shift - tau
  fl.target_entry = 1.0;
  fl.source_exit = shift - tm->s_entry;
  if (fl.source_exit > -1.0) throw std::runtime_error("standardize: segment too short");
  if (fl.source_exit < -L + 2 * ds) throw std::runtime_error("standardize: window too small");

  const CriticalPoint& cs = sys.cp(source);
  const CriticalPoint& ct = sys.cp(target);
  fl.src_lift = cs.location + tm->lift_offset;
  fl.tgt_lift = ct.location + sp->lift_offset;

  fl.entry_defect = 0.0;
  for (int j = 0; j < 2; ++j) {
    double ls = cs.eigenvalues[j], lt = ct.eigenvalues[j];
    fl.tgt_coeff[j] = lt > 0 ? sp->coeff_entry[j] * std::exp(lt * shift) : 0.0;
    if (lt < 0) fl.entry_defect += std::abs(sp->coeff_entry[j]);
    fl.src_coeff[j] = ls < 0 ? tm->coeff_entry[j] * std::exp(ls * (shift - tm->s_entry)) : 0.0;
    if (ls > 0) fl.entry_defect += std::abs(tm->coeff_entry[j]);
  }

  size_t n = static_cast<size_t>(std::lround(2.0 * L / ds)) + 1;
  fl.samples.resize(n);
  for (size_t k = 0; k < n; ++k) {
    double s = -L + static_cast<double>(k) * ds;
    if (s >= fl.target_entry)
      fl.samples[k] = tail_eval(fl.tgt_lift, ct.eigenvectors, ct.eigenvalues, fl.tgt_coeff, s);
    else if (s <= fl.source_exit)
      fl.samples[k] = tail_eval(fl.src_lift, cs.eigenvectors, cs.eigenvalues, fl.src_coeff, s);
    else
      fl.samples[k] = orbit.eval(shift - s);
  }
  fl.tail_source = fit_tail(fl, false);
  fl.tail_target = fit_tail(fl, true);
  fl.side_label = torus_side_label(fl);
  return fl;
}

Flowline standardize(const Flowline& fl, double L, double ds) {
  Flowline out = fl;
  out.L = L;
  out.ds = ds;
  size_t n = static_cast<size_t>(std::lround(2.0 * L / ds)) + 1;
  out.samples.resize(n);
  for (size_t k = 0; k < n; ++k) out.samples[k] = fl.eval(-L + static_cast<double>(k) * ds);
  out.tail_source = fit_tail(out, false);
  out.tail_target = fit_tail(out, true);
  return out;
}

TailData fit_tail(const Flowline& fl, bool target_end) {
  const CriticalPoint& c = target_end ? fl.tgt_cp() : fl.src_cp();
  const Vec2 lift = target_end ? fl.tgt_lift : fl.src_lift;
  double a = target_end ? fl.target_entry : -fl.L;
  double b = target_end ? fl.L : fl.source_exit;
  double s1 = a + 0.25 * (b - a), s2 = a + 0.5 * (b - a), s3 = a + 0.75 * (b - a);

  auto frame_coeff = [&](double s) -> Vec2 {
    return c.eigenvectors.transpose() * (fl.eval(s) - lift);
  };
  Vec2 c1 = frame_coeff(s1);
  TailData td;
  for (int j = 0; j < 2; ++j) td.coefficient[j] = c1[j] * std::exp(c.eigenvalues[j] * s1);
  int dom = std::abs(c1[0]) >= std::abs(c1[1]) ? 0 : 1;
  td.rate = c.eigenvalues[dom];

  double res = 0.0;
  for (double s : {s2, s3}) {
    Vec2 pred(td.coefficient[0] * std::exp(-c.eigenvalues[0] * s),
              td.coefficient[1] * std::exp(-c.eigenvalues[1] * s));
    Vec2 act = frame_coeff(s);
    double scale = std::max(pred.norm(), 1e-300);
    res = std::max(res, (act - pred).norm() / scale);
  }
  td.fit_residual = res;
  if (res > Defaults::tail_fit_tol)
    throw std::runtime_error("fit_tail: tail not in linear regime; enlarge the window");
  return td;
}

ConnectionSet find_connections(const MorseSystem& sys, int source, int target) {
  const CriticalPoint& cs = sys.cp(source);
  const CriticalPoint& ct = sys.cp(target);
  if (!(cs.value > ct.value))
    throw std::invalid_argument("find_connections: source must sit above target");

  ConnectionSet out;
  const double eps = Defaults::seed_offset;

  if (cs.index == 1) {
    for (const Vec2& v : unstable_manifold_directions(cs, 2)) {
      Orbit o = propagate(sys, cs.location + eps * v, {});
      if (o.status == OrbitStatus::Converged && o.terminal_cp == target)
        out.isolated.push_back(standardize_forward_orbit(sys, o, source, target));
    }
    return out;
  }

  if (cs.index == 2 && ct.index == 1) {
    // the connections are the target's stable rays followed backward
    Vec2 v = ct.eigenvectors.col(1);  // positive eigenvalue
    for (const Vec2& w : {Vec2(v), Vec2(-v)}) {
      PropagateOptions opt;
      opt.backward = true;
      Orbit o = propagate(sys, ct.location + eps * w, opt);
      if (o.status == OrbitStatus::Converged && o.terminal_cp == source)
        out.isolated.push_back(standardize_backward_orbit(sys, o, source, target));
    }
    return out;
  }

  if (cs.index == 2 && ct.index == 0) {
    int n = Defaults::unstable_circle_count;
    std::vector<bool> hits(static_cast<size_t>(n), false);
    std::vector<Orbit> orbits(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      double ang = 2.0 * M_PI * i / n;
      orbits[static_cast<size_t>(i)] =
          propagate(sys, cs.location + eps * Vec2(std::cos(ang), std::sin(ang)), {});
      hits[static_cast<size_t>(i)] =
          orbits[static_cast<size_t>(i)].status == OrbitStatus::Converged &&
          orbits[static_cast<size_t>(i)].terminal_cp == target;
    }
    // group circularly contiguous hit runs
    std::vector<std::pair<int, int>> runs;
    int i = 0;
    while (i < n) {
      if (!hits[static_cast<size_t>(i)]) {
        ++i;
        continue;
      }
      int j = i;
      while (j < n && hits[static_cast<size_t>(j)]) ++j;
      runs.emplace_back(i, j - 1);
      i = j;
    }
    if (runs.size() >= 2 && runs.front().first == 0 && runs.back().second == n - 1) {
      runs.front().first = runs.back().first - n;
      runs.pop_back();
    }
    for (auto [lo, hi] : runs) {
      ConnectionFamily fam;
      fam.angle_lo = 2.0 * M_PI * lo / n;
      fam.angle_hi = 2.0 * M_PI * hi / n;
      int mid = ((lo + hi) / 2 % n + n) % n;
      Flowline rep = standardize_forward_orbit(sys, orbits[static_cast<size_t>(mid)], source, target);
      rep.seed_angle = 2.0 * M_PI * mid / n;
      fam.representatives.push_back(std::move(rep));
      out.families.push_back(std::move(fam));
    }
    return out;
  }

  return out;  // nothing to do for index-0 targets of saddles etc.
}

TorusConnections torus_connections(const MorseSystem& sys) {
  if (sys.critical_points.size() != 4) throw std::runtime_error("torus_connections: need 4 points");
  TorusConnections tc;
  tc.i_max = 0;
  tc.i_x0 = 1;
  tc.i_x1 = 2;
  tc.i_min = 3;

  auto pick = [](ConnectionSet& cs, const std::string& label) -> Flowline& {
    for (Flowline& f : cs.isolated)
      if (f.side_label == label) return f;
    throw std::runtime_error("torus_connections: missing side " + label);
  };

  ConnectionSet a = find_connections(sys, tc.i_max, tc.i_x0);
  ConnectionSet b = find_connections(sys, tc.i_x0, tc.i_x1);
  ConnectionSet c = find_connections(sys, tc.i_x1, tc.i_min);
  if (a.isolated.size() != 2 || b.isolated.size() != 2 || c.isolated.size() != 2)
    throw std::runtime_error("torus_connections: expected 2+2+2 isolated connections");
  tc.u_minus_front = pick(a, "front");
  tc.u_minus_back = pick(a, "back");
  tc.u0_left = pick(b, "left");
  tc.u0_right = pick(b, "right");
  tc.u_plus_front = pick(c, "front");
  tc.u_plus_back = pick(c, "back");
  return tc;
}

}  // namespace obg
