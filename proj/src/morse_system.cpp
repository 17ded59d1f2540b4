#include "obg/morse_system.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace obg {

namespace {

double get_param(const std::map<std::string, double>& m, const std::string& k) {
  auto it = m.find(k);
  if (it == m.end()) throw std::invalid_argument("missing parameter: " + k);
  return it->second;
}

double get_param_or(const std::map<std::string, double>& m, const std::string& k, double def) {
  auto it = m.find(k);
  return it == m.end() ? def : it->second;
}

// symmetric 2x2 eigendecomposition, eigenvalues ascending, deterministic
// eigenvector signs (largest-magnitude entry positive)
void sym_eigen(const Mat2& H, Vec2& evals, Mat2& evecs) {
  Eigen::SelfAdjointEigenSolver<Mat2> es(H);
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
  for (int j = 0; j < 2; ++j) {
    Vec2 v = evecs.col(j);
    int big = std::abs(v[0]) >= std::abs(v[1]) ? 0 : 1;
    if (v[big] < 0.0) evecs.col(j) = -v;
  }
}

}  // namespace

Vec2 GradientPerturbation::value(const DomainSpec& dom, const Vec2& p) const {
  Vec2 d = dom.delta(center, p);
  double rho = d.norm() / radius;
  if (rho >= 1.0) return Vec2::Zero();
  return amplitude * smoothstep(1.0 - rho) * direction;
}

Mat2 GradientPerturbation::jacobian(const DomainSpec& dom, const Vec2& p) const {
  Vec2 d = dom.delta(center, p);
  double r = d.norm();
  double rho = r / radius;
  if (rho >= 1.0 || r < 1e-14) return Mat2::Zero();
  Vec2 grad_rho = d / (r * radius);
  // d/dp [amplitude * S(1-rho)] = -amplitude * S'(1-rho) * grad_rho
  return (-amplitude * smoothstep_d1(1.0 - rho)) * direction * grad_rho.transpose();
}

double MorseSystem::f_raw(const Vec2& p) const {
  const double R = get_param(params, "R"), r = get_param(params, "r");
  return (R + r * std::cos(p[0])) * std::sin(p[1]);
}

Vec2 MorseSystem::grad_raw(const Vec2& p) const {
  const double R = get_param(params, "R"), r = get_param(params, "r");
  return {-r * std::sin(p[0]) * std::sin(p[1]), (R + r * std::cos(p[0])) * std::cos(p[1])};
}

Mat2 MorseSystem::hess_raw(const Vec2& p) const {
  const double R = get_param(params, "R"), r = get_param(params, "r");
  Mat2 H;
  H(0, 0) = -r * std::cos(p[0]) * std::sin(p[1]);
  H(0, 1) = H(1, 0) = -r * std::sin(p[0]) * std::cos(p[1]);
  H(1, 1) = -(R + r * std::cos(p[0])) * std::sin(p[1]);
  return H;
}

int MorseSystem::ball_of(const Vec2& p) const {
  for (size_t i = 0; i < critical_points.size(); ++i) {
    if (domain.dist(p, critical_points[i].location) < mollify_radius) return static_cast<int>(i);
  }
  return -1;
}

int MorseSystem::chart_of(const Vec2& p) const {
  for (size_t i = 0; i < critical_points.size(); ++i) {
    if (domain.dist(p, critical_points[i].location) < critical_points[i].chart_radius)
      return static_cast<int>(i);
  }
  return -1;
}

int MorseSystem::cp_near(const Vec2& p, double tol) const {
  for (size_t i = 0; i < critical_points.size(); ++i) {
    if (domain.dist(p, critical_points[i].location) < tol) return static_cast<int>(i);
  }
  return -1;
}

EvalResult MorseSystem::evaluate(const Vec2& p) const {
  int bi = ball_of(p);
  if (bi < 0) return {f_raw(p), grad_raw(p), hess_raw(p)};

  const CriticalPoint& c = critical_points[static_cast<size_t>(bi)];
  Vec2 d = domain.delta(c.location, p);
  double rho = d.norm();
  Mat2 H = c.eigenvectors * c.eigenvalues.asDiagonal() * c.eigenvectors.transpose();
  double fq = c.value + 0.5 * d.dot(H * d);
  Vec2 gq = H * d;

  double inner = chart_radius();
  if (rho <= inner) return {fq, gq, H};

  // blend annulus: b = 0 at the inner sphere (pure quadratic), 1 at the outer
  double w = blend_width;
  double tau = (rho - inner) / w;
  double b = smoothstep(tau);
  double bp = smoothstep_d1(tau) / w;
  double bpp = smoothstep_d2(tau) / (w * w);

  // analytic family in centered coordinates
  Vec2 pa = c.location + d;
  double fa = f_raw(pa);
  Vec2 ga = grad_raw(pa);
  Mat2 Ha = hess_raw(pa);

  Vec2 n = d / rho;
  double fdiff = fa - fq;
  Vec2 gdiff = ga - gq;

  double f = fq + b * fdiff;
  Vec2 g = gq + b * gdiff + bp * fdiff * n;
  Mat2 hess = H + b * (Ha - H) + bp * (gdiff * n.transpose() + n * gdiff.transpose()) +
              fdiff * (bpp * n * n.transpose() + bp * (Mat2::Identity() - n * n.transpose()) / rho);
  return {f, g, hess};
}

Vec2 MorseSystem::field(const Vec2& p) const {
  Vec2 g = evaluate(p).grad;
  if (perturbation && perturbation_t != 0.0) g += perturbation_t * perturbation->value(domain, p);
  return g;
}

Mat2 MorseSystem::field_jacobian(const Vec2& p) const {
  Mat2 J = evaluate(p).hess;
  if (perturbation && perturbation_t != 0.0) J += perturbation_t * perturbation->jacobian(domain, p);
  return J;
}

std::vector<CriticalPoint> find_critical_points(const MorseSystem& sys, int grid_n) {
  if (grid_n < 32) throw std::invalid_argument("find_critical_points: grid_n >= 32 required");
  std::vector<Vec2> found;
  const Vec2 P = sys.domain.periods;

  for (int i = 0; i < grid_n; ++i) {
    for (int j = 0; j < grid_n; ++j) {
      Vec2 x(P[0] * (i + 0.5) / grid_n, P[1] * (j + 0.5) / grid_n);
      bool converged = false;
      for (int it = 0; it < Defaults::newton_max_iter; ++it) {
        Vec2 g = sys.grad_raw(x);
        Mat2 H = sys.hess_raw(x);
        Vec2 step = H.fullPivLu().solve(g);
        if (!step.allFinite() || step.norm() > 1.0) break;
        x = sys.domain.reduce(x - step);
        if (step.norm() < Defaults::newton_tol) {
          converged = true;
          break;
        }
      }
      if (!converged || sys.grad_raw(x).norm() > 1e-9) continue;
      bool dup = false;
      for (const Vec2& y : found) {
        if (sys.domain.dist(x, y) < Defaults::merge_radius) {
          dup = true;
          break;
        }
      }
      if (!dup) found.push_back(x);
    }
  }

  std::vector<CriticalPoint> cps;
  for (const Vec2& x : found) {
    Mat2 H = sys.hess_raw(x);
    if (std::abs(H.determinant()) < Defaults::hess_degenerate_det) {
      std::ostringstream os;
      os << "find_critical_points: non-Morse point at (" << x[0] << "," << x[1] << ")";
      throw std::runtime_error(os.str());
    }
    CriticalPoint c;
    c.location = x;
    c.value = sys.f_raw(x);
    sym_eigen(H, c.eigenvalues, c.eigenvectors);
    c.index = (c.eigenvalues[0] < 0.0 ? 1 : 0) + (c.eigenvalues[1] < 0.0 ? 1 : 0);
    if (std::abs(c.eigenvalues[0]) < Defaults::min_abs_eigenvalue ||
        std::abs(c.eigenvalues[1]) < Defaults::min_abs_eigenvalue)
      throw std::runtime_error("find_critical_points: eigenvalue below Morse threshold");
    c.chart_radius = sys.chart_radius();
    cps.push_back(c);
  }
  std::sort(cps.begin(), cps.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.value > b.value; });
  return cps;
}

MorseSystem build_builtin(const std::string& family, const std::map<std::string, double>& params,
                          double mollify_radius, double blend_width) {
  if (family != "flat_torus_height" && family != "flat_torus_perturbed")
    throw std::invalid_argument("build_builtin: unknown family " + family);
  const double R = get_param(params, "R"), r = get_param(params, "r");
  if (!(R > r && r > 0.0))
    throw std::invalid_argument("build_builtin: need R > r > 0 (degenerate critical structure)");
  if (!(blend_width > 0.0 && blend_width < mollify_radius))
    throw std::invalid_argument("build_builtin: need 0 < blend_width < mollify_radius");

  MorseSystem sys;
  sys.domain = DomainSpec(2.0 * M_PI, 2.0 * M_PI, "flat_torus");
  sys.family = family;
  sys.params = params;
  sys.mollify_radius = mollify_radius;
  sys.blend_width = blend_width;
  sys.critical_points = find_critical_points(sys);

  // mollification balls around distinct critical points must be disjoint
  double min_sep = 1e30;
  for (size_t i = 0; i < sys.critical_points.size(); ++i)
    for (size_t j = i + 1; j < sys.critical_points.size(); ++j)
      min_sep = std::min(min_sep, sys.domain.dist(sys.critical_points[i].location,
                                                  sys.critical_points[j].location));
  if (2.0 * mollify_radius > min_sep)
    throw std::invalid_argument("build_builtin: mollify_radius exceeds half the critical separation");

  // the blend must not create gradient zeros in any annulus
  for (const CriticalPoint& c : sys.critical_points) {
    for (int ir = 0; ir <= 20; ++ir) {
      double rho = sys.chart_radius() + blend_width * ir / 20.0;
      for (int ia = 0; ia < 64; ++ia) {
        double ang = 2.0 * M_PI * ia / 64.0;
        Vec2 p = sys.domain.reduce(c.location + rho * Vec2(std::cos(ang), std::sin(ang)));
        double gn = sys.evaluate(p).grad.norm();
        double bound = 0.25 * std::min(std::abs(c.eigenvalues[0]), std::abs(c.eigenvalues[1])) * rho;
        if (gn < bound) {
          std::ostringstream os;
          os << "build_builtin: blend creates gradient zero near (" << p[0] << "," << p[1]
             << "), |grad|=" << gn;
          throw std::runtime_error(os.str());
        }
      }
    }
  }

  if (family == "flat_torus_perturbed") {
    GradientPerturbation gp;
    gp.center = Vec2(get_param(params, "center_theta"), get_param(params, "center_phi"));
    gp.radius = get_param_or(params, "radius", Defaults::bump_radius);
    gp.amplitude = get_param_or(params, "amplitude", Defaults::bump_amplitude);
    gp.direction = Vec2(get_param_or(params, "dir_theta", 1.0), get_param_or(params, "dir_phi", 0.0));
    if (gp.direction.norm() < 1e-12) throw std::invalid_argument("build_builtin: zero direction");
    gp.direction.normalize();
    sys.perturbation = gp;
    sys.perturbation_t = get_param_or(params, "t", 0.0);
  }
  return sys;
}

}  // namespace obg
