#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "lowps/boundary_solvers.hpp"
#include "lowps/errors.hpp"

namespace lowps {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInvPhi = 0.6180339887498949;

struct Extremum {
  double x;
  double f;
};

// Golden-section search for a maximum of f on [a, b].
template <class F>
Extremum golden_max(double a, double b, double width, int max_iter, F&& f, int* iterations = nullptr) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (b - a > width && it < max_iter) {
    ++it;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  if (iterations) *iterations = it;
  return fc >= fd ? Extremum{c, fc} : Extremum{d, fd};
}

template <class F>
Extremum golden_min(double a, double b, double width, int max_iter, F&& f) {
  Extremum e = golden_max(a, b, width, max_iter, [&](double x) { return -f(x); });
  return {e.x, -e.f};
}

// Local minimum of mu on the unit circle near phi0: golden section on
// [phi0 - w, phi0 + w], then bisection on the sign of the angular derivative
// where it brackets a zero.
Extremum unit_circle_local_min(const GramCache& g, double phi0, double w) {
  auto mu_at = [&](double phi) { return mu(g, std::polar(1.0, phi)); };
  Extremum e = golden_min(phi0 - w, phi0 + w, 1e-12, 200, mu_at);
  try {
    double lo = e.x - 1e-6;
    double hi = e.x + 1e-6;
    if (dmu_dphi(g, 1.0, lo) < 0.0 && dmu_dphi(g, 1.0, hi) > 0.0) {
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dmu_dphi(g, 1.0, mid) < 0.0 ? lo : hi) = mid;
      }
      const double x = 0.5 * (lo + hi);
      const double fx = mu_at(x);
      if (fx <= e.f) e = {x, fx};
    }
  } catch (const Error&) {
    // Non-smooth minimiser: keep the golden-section point.
  }
  e.x = std::fmod(e.x, kTwoPi);
  if (e.x < 0.0) e.x += kTwoPi;
  return e;
}

void require_discrete_stable(const GramCache& g) {
  const double radius = g.spectral_radius();
  if (!(radius < 1.0)) {
    throw PreconditionError("not asymptotically stable: spectral radius " + std::to_string(radius) +
                            " >= 1");
  }
}

void require_continuous_stable(const GramCache& g) {
  const double abscissa = g.core_eigenvalues().real().maxCoeff();
  if (!(abscissa < 0.0)) {
    throw PreconditionError("not continuous-time stable: an eigenvalue of V*U has real part " +
                            std::to_string(abscissa));
  }
}

// Shared outer maximisation over log(eps) of ratio(eps).
template <class Ratio>
StabilityReport maximise_over_eps(const GramCache& g, const KreissOptions& opt, Ratio&& ratio) {
  if (opt.scan_points < 3) throw PreconditionError("Kreiss scan needs at least 3 points");
  const double norm_a = g.operator_norm();
  const double scale = norm_a > 0.0 ? norm_a : 1.0;
  const double log_lo = std::log(opt.eps_lo_factor * scale);
  const double log_hi = std::log(opt.eps_hi_factor * scale);

  StabilityReport rep;
  Complex best_point;
  double best_ratio = -std::numeric_limits<double>::infinity();
  double best_eps = 0.0;
  auto eval = [&](double log_eps) {
    const double eps = std::exp(log_eps);
    const ExtremalPoint p = ratio.extremal(eps);
    const double value = ratio.excess(p.value) / eps;
    rep.trace.push_back({eps, value});
    if (value > best_ratio) {
      best_ratio = value;
      best_eps = eps;
      best_point = p.point;
    }
    return value;
  };

  const int n = opt.scan_points;
  std::vector<double> grid(static_cast<std::size_t>(n));
  std::vector<double> vals(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    grid[j] = log_lo + (log_hi - log_lo) * j / (n - 1);
    vals[j] = eval(grid[j]);
  }
  const int jbest = static_cast<int>(std::max_element(vals.begin(), vals.end()) - vals.begin());
  const double a = grid[std::max(jbest - 1, 0)];
  const double b = grid[std::min(jbest + 1, n - 1)];
  int golden_iters = 0;
  golden_max(a, b, opt.log_tol, opt.max_iter, eval, &golden_iters);

  rep.iterations = n + golden_iters;
  const double step = (log_hi - log_lo) / (n - 1);
  double width = step * 2.0;
  for (int k = 0; k < golden_iters; ++k) width *= kInvPhi;
  rep.bracket_width = width;
  rep.converged = width <= opt.log_tol;

  if (best_ratio >= 1.0) {
    rep.value = best_ratio;
    rep.argpoint = best_point;
    rep.argmax_epsilon = best_eps;
  } else {
    // The supremum is the eps -> infinity limit.
    rep.value = 1.0;
    rep.argpoint = best_point;
    rep.argmax_epsilon = std::numeric_limits<double>::infinity();
    rep.converged = true;
  }
  return rep;
}

}  // namespace

StabilityReport distance_to_instability(const GramCache& g, const StabilityOptions& opt) {
  require_discrete_stable(g);
  if (opt.scan_points < 8) throw PreconditionError("distance_to_instability needs scan_points >= 8");

  StabilityReport rep;
  double hi = std::numeric_limits<double>::infinity();
  double scan_phi = 0.0;
  for (int j = 0; j < opt.scan_points; ++j) {
    const double phi = kTwoPi * j / opt.scan_points;
    const double m = mu(g, std::polar(1.0, phi));
    if (m < hi) {
      hi = m;
      scan_phi = phi;
    }
  }
  double lo = 0.0;
  CircleIntersections last;
  int it = 0;
  while (hi - lo > opt.tol * std::max(1.0, hi) && it < opt.max_iter) {
    ++it;
    const double mid = 0.5 * (lo + hi);
    CircleIntersections ci = circle_intersections(g, 1.0, mid, opt.inner.intersections);
    if (!ci.angles.empty()) {
      hi = mid;
      last = std::move(ci);
    } else {
      lo = mid;
    }
    rep.trace.push_back({static_cast<double>(it), hi});
  }
  rep.iterations = it;
  rep.bracket_width = hi - lo;
  rep.cross_check = hi;

  // Candidate minimisers: the scan point and the arcs inside the last level.
  std::vector<std::pair<double, double>> starts;  // (angle, half-width)
  starts.emplace_back(scan_phi, kTwoPi / opt.scan_points);
  const auto& ang = last.angles;
  for (std::size_t j = 0; j < ang.size(); ++j) {
    const double a = ang[j];
    const double b = (j + 1 < ang.size()) ? ang[j + 1] : ang[0] + kTwoPi;
    const double mid = 0.5 * (a + b);
    if (mu(g, std::polar(1.0, mid)) <= last.epsilon) starts.emplace_back(mid, 0.5 * (b - a) + 1e-9);
  }
  Extremum best{scan_phi, std::numeric_limits<double>::infinity()};
  for (const auto& [phi0, w] : starts) {
    const Extremum e = unit_circle_local_min(g, phi0, std::min(w, std::numbers::pi));
    if (e.f < best.f) best = e;
  }
  rep.value = best.f;
  rep.argpoint = std::polar(1.0, best.x);
  rep.converged = rep.bracket_width <= opt.tol * std::max(1.0, hi) &&
                  best.f - lo <= 10.0 * opt.tol * std::max(1.0, hi) + 1e-8 * std::max(1.0, hi);
  return rep;
}

StabilityReport distance_to_instability(const LowRankFactors& f, const StabilityOptions& opt) {
  return distance_to_instability(GramCache::from_factors(f), opt);
}

StabilityReport kreiss_discrete(const GramCache& g, const KreissOptions& opt) {
  require_discrete_stable(g);
  struct {
    const GramCache& g;
    const SolverOptions& inner;
    ExtremalPoint extremal(double eps) const { return pseudospectral_radius(g, eps, inner); }
    double excess(double rho) const { return rho - 1.0; }
  } ratio{g, opt.inner};
  StabilityReport rep = maximise_over_eps(g, opt, ratio);

  // Resolvent ratio (|z| - 1) / mu(z) along the maximising ray.
  const double theta = std::abs(rep.argpoint) > 0.0 ? std::arg(rep.argpoint) : 0.0;
  const double scale = std::max(g.operator_norm(), 1.0);
  auto along_ray = [&](double log_t) {
    const double t = 1.0 + std::exp(log_t);
    const double m = mu(g, std::polar(t, theta));
    return m > 0.0 ? (t - 1.0) / m : std::numeric_limits<double>::infinity();
  };
  const double lo = std::log(1e-10), hi = std::log(1e4 * scale);
  double best_x = lo, best_f = -1.0;
  for (int j = 0; j < 80; ++j) {
    const double x = lo + (hi - lo) * j / 79.0;
    const double f = along_ray(x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  const double step = (hi - lo) / 79.0;
  const Extremum e = golden_max(best_x - step, best_x + step, 1e-9, 200, along_ray);
  rep.cross_check = std::max({1.0, best_f, e.f});
  return rep;
}

StabilityReport kreiss_discrete(const LowRankFactors& f, const KreissOptions& opt) {
  return kreiss_discrete(GramCache::from_factors(f), opt);
}

StabilityReport kreiss_continuous(const GramCache& g, const KreissOptions& opt) {
  require_continuous_stable(g);
  struct {
    const GramCache& g;
    const SolverOptions& inner;
    ExtremalPoint extremal(double eps) const { return pseudospectral_abscissa(g, eps, inner); }
    double excess(double alpha) const { return alpha; }
  } ratio{g, opt.inner};
  StabilityReport rep = maximise_over_eps(g, opt, ratio);

  // Resolvent ratio Re z / mu(z) along the maximising horizontal line.
  const double y = rep.argpoint.imag();
  const double scale = std::max(g.operator_norm(), 1.0);
  auto along_line = [&](double log_x) {
    const double x = std::exp(log_x);
    const double m = mu(g, Complex(x, y));
    return m > 0.0 ? x / m : std::numeric_limits<double>::infinity();
  };
  const double lo = std::log(1e-10 * scale), hi = std::log(1e4 * scale);
  double best_x = lo, best_f = -1.0;
  for (int j = 0; j < 80; ++j) {
    const double x = lo + (hi - lo) * j / 79.0;
    const double f = along_line(x);
    if (f > best_f) {
      best_f = f;
      best_x = x;
    }
  }
  const double step = (hi - lo) / 79.0;
  const Extremum e = golden_max(best_x - step, best_x + step, 1e-9, 200, along_line);
  rep.cross_check = std::max({1.0, best_f, e.f});
  return rep;
}

StabilityReport kreiss_continuous(const LowRankFactors& f, const KreissOptions& opt) {
  return kreiss_continuous(GramCache::from_factors(f), opt);
}

std::pair<double, double> kreiss_transient_bounds(double kappa, std::optional<Index> d) {
  if (!(kappa >= 1.0)) throw PreconditionError("kreiss_transient_bounds needs kappa >= 1");
  if (d) {
    if (*d < 1) throw PreconditionError("kreiss_transient_bounds needs d >= 1");
    return {kappa, std::numbers::e * static_cast<double>(*d) * kappa};
  }
  return {kappa, 0.5 * std::numbers::e * kappa * kappa};
}

}  // namespace lowps
