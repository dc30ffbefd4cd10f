#include "lowps/boundary_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lowps/errors.hpp"
#include "lowps/linalg.hpp"

namespace lowps {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMergeTol = 1e-9;
constexpr double kMaxNewtonStep = 1e-3;

double wrap_angle(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

// Newton on mu(x) - eps from a root estimate. Steps that grow the residual or
// jump further than kMaxNewtonStep are refused.
template <class Mu, class Deriv>
double newton_polish(double x, double eps, Mu&& mu_at, Deriv&& deriv_at) {
  double f = mu_at(x) - eps;
  for (int it = 0; it < 8; ++it) {
    if (std::abs(f) <= 1e-15 * std::max(1.0, eps)) break;
    double slope;
    try {
      slope = deriv_at(x);
    } catch (const Error&) {
      break;
    }
    if (!(std::abs(slope) > 0.0)) break;
    const double step = f / slope;
    if (!(std::abs(step) <= kMaxNewtonStep)) break;
    const double x_new = x - step;
    const double f_new = mu_at(x_new) - eps;
    if (!(std::abs(f_new) < std::abs(f))) break;
    x = x_new;
    f = f_new;
  }
  return x;
}

struct Candidate {
  double x;
  double residual;
};

// Sorts and merges candidates closer than kMergeTol, keeping the smaller
// residual. With `cyclic`, the first and last may merge across 2 pi.
std::vector<Candidate> merge_sorted(std::vector<Candidate> c, bool cyclic) {
  std::sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) { return a.x < b.x; });
  std::vector<Candidate> out;
  for (const auto& cand : c) {
    if (!out.empty() && cand.x - out.back().x <= kMergeTol * std::max(1.0, std::abs(cand.x))) {
      if (cand.residual < out.back().residual) out.back() = cand;
    } else {
      out.push_back(cand);
    }
  }
  if (cyclic && out.size() > 1 && out.front().x + kTwoPi - out.back().x <= kMergeTol) {
    if (out.back().residual < out.front().residual) out.front() = out.back();
    out.pop_back();
  }
  return out;
}

PencilEigenvalues circle_pencil(const GramCache& g, double rho, double eps, CMatrix& l, CMatrix& r) {
  const Index k = g.rank();
  const double s = rho * rho - eps * eps;
  l.resize(2 * k, 2 * k);
  r.setZero(2 * k, 2 * k);
  const CMatrix rho_uv = rho * g.uv;
  l.topLeftCorner(k, k) = rho_uv;
  l.topRightCorner(k, k) = rho_uv * g.uu;
  l.bottomLeftCorner(k, k) = g.vv;
  l.bottomRightCorner(k, k) = g.vv * g.uu;
  l.bottomRightCorner(k, k).diagonal().array() += s;
  r.topLeftCorner(k, k).diagonal().setConstant(s);
  r.topRightCorner(k, k) = (rho * rho) * g.uu;
  r.bottomRightCorner(k, k) = rho * g.vu;
  return generalized_eigenvalues(l, r);
}

}  // namespace

CircleIntersections circle_intersections(const GramCache& g, double rho, double eps,
                                         const IntersectionOptions& opt) {
  if (!(rho > 0.0) || !std::isfinite(rho)) {
    throw PreconditionError("circle_intersections needs a positive radius");
  }
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw PreconditionError("circle_intersections needs eps >= 0");
  }

  CMatrix l, r;
  double eps_used = eps;
  PencilEigenvalues ev = circle_pencil(g, rho, eps_used, l, r);
  if (has_indeterminate_pair(ev, spectral_norm(l), spectral_norm(r))) {
    eps_used = eps * (1.0 + 1e-12) + (eps == 0.0 ? 1e-300 : 0.0);
    ev = circle_pencil(g, rho, eps_used, l, r);
    if (has_indeterminate_pair(ev, spectral_norm(l), spectral_norm(r))) {
      throw PreconditionError("irregular pencil at rho = " + std::to_string(rho) +
                              ", eps = " + std::to_string(eps) +
                              "; retry with a slightly perturbed eps");
    }
  }

  auto mu_at = [&](double phi) { return mu(g, std::polar(rho, phi)); };
  auto deriv_at = [&](double phi) { return dmu_dphi(g, rho, phi); };

  std::vector<Candidate> found;
  for (Index i = 0; i < ev.alpha.size(); ++i) {
    if (std::abs(ev.beta(i)) == 0.0) continue;
    const Complex lam = ev.alpha(i) / ev.beta(i);
    if (!std::isfinite(lam.real()) || !std::isfinite(lam.imag())) continue;
    if (std::abs(std::abs(lam) - 1.0) > opt.unit_tol) continue;
    double phi = wrap_angle(-std::arg(lam));
    if (opt.polish) phi = wrap_angle(newton_polish(phi, eps, mu_at, deriv_at));
    const double res = std::abs(mu_at(phi) - eps);
    if (res <= opt.verify_tol * std::max(1.0, eps)) found.push_back({phi, res});
  }

  CircleIntersections out;
  out.rho = rho;
  out.epsilon = eps;
  for (const auto& c : merge_sorted(std::move(found), true)) {
    out.angles.push_back(c.x);
    out.residuals.push_back(c.residual);
  }
  return out;
}

CircleIntersections circle_intersections(const LowRankFactors& f, double rho, double eps,
                                         const IntersectionOptions& opt) {
  return circle_intersections(GramCache::from_factors(f), rho, eps, opt);
}

LineIntersections line_intersections(const GramCache& g, double a, double eps,
                                     const IntersectionOptions& opt) {
  if (!std::isfinite(a)) throw PreconditionError("line_intersections needs a finite abscissa");
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw PreconditionError("line_intersections needs eps >= 0");
  }
  const Index k = g.rank();
  const Complex i_unit(0.0, 1.0);
  const double shift = a * a - eps * eps;

  CMatrix b1 = CMatrix::Zero(2 * k, 2 * k);
  b1.topLeftCorner(k, k) = -i_unit * g.uv;
  b1.bottomRightCorner(k, k) = i_unit * g.vu;
  CMatrix b0(2 * k, 2 * k);
  b0.topLeftCorner(k, k) = -a * g.uv;
  b0.topLeftCorner(k, k).diagonal().array() += shift;
  b0.topRightCorner(k, k) = (eps * eps) * g.uu;
  b0.bottomLeftCorner(k, k) = g.vv;
  b0.bottomRightCorner(k, k) = -a * g.vu;
  b0.bottomRightCorner(k, k).diagonal().array() += shift;

  const CVector w = quadratic_eigenvalues(b1, b0);

  auto mu_at = [&](double om) { return mu(g, Complex(a, om)); };
  auto deriv_at = [&](double om) { return dmu_domega(g, a, om); };

  std::vector<Candidate> found;
  for (Index i = 0; i < w.size(); ++i) {
    if (std::abs(w(i).imag()) > opt.real_tol * (1.0 + std::abs(w(i)))) continue;
    double om = w(i).real();
    if (opt.polish) om = newton_polish(om, eps, mu_at, deriv_at);
    const double res = std::abs(mu_at(om) - eps);
    if (res <= opt.verify_tol * std::max(1.0, eps)) found.push_back({om, res});
  }

  LineIntersections out;
  out.a = a;
  out.epsilon = eps;
  for (const auto& c : merge_sorted(std::move(found), false)) {
    out.omegas.push_back(c.x);
    out.residuals.push_back(c.residual);
  }
  return out;
}

LineIntersections line_intersections(const LowRankFactors& f, double a, double eps,
                                     const IntersectionOptions& opt) {
  return line_intersections(GramCache::from_factors(f), a, eps, opt);
}

std::optional<double> ray_extent(const GramCache& g, double theta, double eps,
                                 const IntersectionOptions& opt) {
  // Rotating by c = i e^{-i theta} maps the ray onto the positive imaginary axis.
  const Complex c = Complex(0.0, 1.0) * std::polar(1.0, -theta);
  const LineIntersections hits = line_intersections(g.rotated(c), 0.0, eps, opt);
  std::optional<double> best;
  for (double om : hits.omegas) {
    if (om >= 0.0 && (!best || om > *best)) best = om;
  }
  return best;
}

std::optional<double> horizontal_extent(const GramCache& g, double y, double eps,
                                        const IntersectionOptions& opt) {
  // Rotating by -i sends x + i y to y - i x, the vertical line Re = y.
  const LineIntersections hits = line_intersections(g.rotated(Complex(0.0, -1.0)), y, eps, opt);
  if (hits.omegas.empty()) return std::nullopt;
  return -hits.omegas.front();
}

namespace {

// Outermost crossing of mu = eps on [lo, hi] given mu(lo) <= eps < mu(hi),
// when the eigenproblem route misses it.
template <class Mu>
double bisect_crossing(double lo, double hi, double eps, Mu&& mu_at) {
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (mu_at(mid) <= eps ? lo : hi) = mid;
  }
  return lo;
}

void check_level(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw PreconditionError("eps must be positive and finite");
}

}  // namespace

ExtremalPoint pseudospectral_radius(const GramCache& g, double eps, const SolverOptions& opt) {
  check_level(eps);
  const CVector spec = g.spectrum();
  Index k0 = 0;
  for (Index i = 1; i < spec.size(); ++i) {
    if (std::abs(spec(i)) > std::abs(spec(k0))) k0 = i;
  }
  const double norm_a = g.operator_norm();

  auto radial = [&](double theta, double floor_t) -> double {
    if (auto t = ray_extent(g, theta, eps, opt.intersections); t && *t >= floor_t) return *t;
    // mu(z) >= |z| - ||A|| puts the far end outside the level set.
    const double hi = norm_a + eps * (1.0 + 1e-8) + 1e-300;
    return bisect_crossing(floor_t, std::max(hi, floor_t),
                           eps, [&](double t) { return mu(g, std::polar(t, theta)); });
  };

  ExtremalPoint out;
  double theta = std::abs(spec(k0)) > 0.0 ? std::arg(spec(k0)) : 0.0;
  double rho = radial(theta, std::abs(spec(k0)));
  out.trace.push_back(rho);

  for (int it = 1; it <= opt.max_iter; ++it) {
    out.iterations = it;
    const CircleIntersections circ = circle_intersections(g, rho, eps, opt.intersections);
    const auto& ang = circ.angles;
    double best = rho;
    double best_theta = theta;
    const std::size_t n = ang.size();
    for (std::size_t j = 0; j < n; ++j) {
      const double start = ang[j];
      const double stop = (j + 1 < n) ? ang[j + 1] : ang[0] + kTwoPi;
      const double mid = 0.5 * (start + stop);
      if (mu(g, std::polar(rho, mid)) >= eps) continue;
      const double t = radial(mid, rho);
      if (t > best) {
        best = t;
        best_theta = wrap_angle(mid);
      }
    }
    if (best - rho <= opt.tol * std::max(1.0, rho)) {
      if (best > rho) {
        rho = best;
        theta = best_theta;
        out.trace.push_back(rho);
      }
      out.value = rho;
      out.point = std::polar(rho, theta);
      return out;
    }
    rho = best;
    theta = best_theta;
    out.trace.push_back(rho);
  }
  throw ConvergenceError("pseudospectral_radius: no convergence after " +
                         std::to_string(opt.max_iter) + " iterations at eps = " +
                         std::to_string(eps));
}

ExtremalPoint pseudospectral_radius(const LowRankFactors& f, double eps, const SolverOptions& opt) {
  return pseudospectral_radius(GramCache::from_factors(f), eps, opt);
}

ExtremalPoint pseudospectral_abscissa(const GramCache& g, double eps, const SolverOptions& opt) {
  check_level(eps);
  const CVector spec = g.spectrum();
  Index k0 = 0;
  for (Index i = 1; i < spec.size(); ++i) {
    if (spec(i).real() > spec(k0).real()) k0 = i;
  }
  const double norm_a = g.operator_norm();

  auto horizontal = [&](double y, double floor_x) -> double {
    if (auto x = horizontal_extent(g, y, eps, opt.intersections); x && *x >= floor_x) return *x;
    const double hi = norm_a + eps * (1.0 + 1e-8) + 1e-300;
    return bisect_crossing(floor_x, std::max(hi, floor_x),
                           eps, [&](double x) { return mu(g, Complex(x, y)); });
  };

  ExtremalPoint out;
  double y = spec(k0).imag();
  double alpha = horizontal(y, spec(k0).real());
  out.trace.push_back(alpha);

  for (int it = 1; it <= opt.max_iter; ++it) {
    out.iterations = it;
    const LineIntersections line = line_intersections(g, alpha, eps, opt.intersections);
    const auto& om = line.omegas;
    double best = alpha;
    double best_y = y;
    for (std::size_t j = 0; j + 1 < om.size(); ++j) {
      const double mid = 0.5 * (om[j] + om[j + 1]);
      if (mu(g, Complex(alpha, mid)) >= eps) continue;
      const double x = horizontal(mid, alpha);
      if (x > best) {
        best = x;
        best_y = mid;
      }
    }
    if (best - alpha <= opt.tol * std::max(1.0, std::abs(alpha))) {
      if (best > alpha) {
        alpha = best;
        y = best_y;
        out.trace.push_back(alpha);
      }
      out.value = alpha;
      out.point = Complex(alpha, y);
      return out;
    }
    alpha = best;
    y = best_y;
    out.trace.push_back(alpha);
  }
  throw ConvergenceError("pseudospectral_abscissa: no convergence after " +
                         std::to_string(opt.max_iter) + " iterations at eps = " +
                         std::to_string(eps));
}

ExtremalPoint pseudospectral_abscissa(const LowRankFactors& f, double eps,
                                      const SolverOptions& opt) {
  return pseudospectral_abscissa(GramCache::from_factors(f), eps, opt);
}

}  // namespace lowps
