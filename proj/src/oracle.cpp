#include "lowps/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lowps/errors.hpp"
#include "lowps/linalg.hpp"

namespace lowps::oracle {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInvPhi = 0.6180339887498949;

template <class F>
double golden_min_x(double a, double b, double tol, F&& f) {
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 300 && b - a > tol; ++it) {
    if (fc <= fd) {
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
  return fc <= fd ? c : d;
}

double norm2(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a)(0);
}

// Coordinate-wise golden-section ascent of f(x, y) starting from a grid
// point with spacings (hx, hy).
template <class F>
std::pair<double, double> refine_2d(double x, double y, double hx, double hy, F&& f) {
  for (int round = 0; round < 12; ++round) {
    x = golden_min_x(x - hx, x + hx, 1e-13 * std::max(1.0, std::abs(x)),
                     [&](double t) { return -f(t, y); });
    y = golden_min_x(y - hy, y + hy, 1e-13 * std::max(1.0, std::abs(y)),
                     [&](double t) { return -f(x, t); });
    hx *= 0.5;
    hy *= 0.5;
  }
  return {x, y};
}

template <class F>
DenseMaximum grid_maximise(const std::vector<double>& xs, const std::vector<double>& ys, F&& f,
                           std::function<Complex(double, double)> to_point) {
  struct Cell {
    double value;
    std::size_t i, j;
  };
  std::vector<Cell> cells;
  cells.reserve(xs.size() * ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) cells.push_back({f(xs[i], ys[j]), i, j});
  }
  const std::size_t keep = std::min<std::size_t>(5, cells.size());
  std::partial_sort(cells.begin(), cells.begin() + keep, cells.end(),
                    [](const Cell& a, const Cell& b) { return a.value > b.value; });
  DenseMaximum best{1.0, Complex(0.0, 0.0)};
  for (std::size_t c = 0; c < keep; ++c) {
    const double hx = xs.size() > 1 ? xs[1] - xs[0] : 1.0;
    const double hy = ys.size() > 1 ? ys[1] - ys[0] : 1.0;
    auto [x, y] = refine_2d(xs[cells[c].i], ys[cells[c].j], hx, hy, f);
    const double v = std::max(f(x, y), cells[c].value);
    if (v > best.value) best = {v, to_point(x, y)};
  }
  return best;
}

}  // namespace

double dense_sigma_min(const CMatrix& a, Complex z) {
  CMatrix shifted = -a;
  shifted.diagonal().array() += z;
  const RVector s = singular_values(shifted);
  return s(s.size() - 1);
}

std::vector<double> dense_sigma_grid(const CMatrix& a, const GridSpec& grid, int threads) {
  grid.validate();
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) { out[k] = dense_sigma_min(a, grid.point(k)); });
  return out;
}

std::vector<std::vector<bool>> dense_pseudospectrum_grid(const CMatrix& a, const GridSpec& grid,
                                                         const std::vector<double>& eps_levels,
                                                         int threads) {
  const std::vector<double> sigma = dense_sigma_grid(a, grid, threads);
  std::vector<std::vector<bool>> masks;
  for (double eps : eps_levels) {
    std::vector<bool> m(sigma.size());
    for (std::size_t k = 0; k < sigma.size(); ++k) m[k] = sigma[k] <= eps;
    masks.push_back(std::move(m));
  }
  return masks;
}

DenseMinimum dense_distance_to_instability(const CMatrix& a, int n_angles, double polish_tol) {
  if (n_angles < 3) throw PreconditionError("dense_distance_to_instability needs n_angles >= 3");
  auto f = [&](double phi) { return dense_sigma_min(a, std::polar(1.0, phi)); };
  std::vector<double> vals(static_cast<std::size_t>(n_angles));
  for (int j = 0; j < n_angles; ++j) vals[j] = f(kTwoPi * j / n_angles);
  const double h = kTwoPi / n_angles;
  DenseMinimum best{std::numeric_limits<double>::infinity(), 0.0};
  for (int j = 0; j < n_angles; ++j) {
    const double prev = vals[(j + n_angles - 1) % n_angles];
    const double next = vals[(j + 1) % n_angles];
    if (vals[j] > prev || vals[j] > next) continue;
    const double phi0 = kTwoPi * j / n_angles;
    const double phi = golden_min_x(phi0 - h, phi0 + h, polish_tol, f);
    const double v = std::min(f(phi), vals[j]);
    if (v < best.value) best = {v, std::fmod(phi + kTwoPi, kTwoPi)};
  }
  return best;
}

DenseMaximum dense_kreiss(const CMatrix& a, int radial_grid, int angular_grid) {
  if (radial_grid < 2 || angular_grid < 3) throw PreconditionError("dense_kreiss grid too small");
  const double r_max = 2.0 * (1.0 + norm2(a)) + 10.0;
  const double s_lo = -6.0, s_hi = std::log10(r_max - 1.0);
  std::vector<double> ss(static_cast<std::size_t>(radial_grid));
  std::vector<double> phis(static_cast<std::size_t>(angular_grid));
  for (int i = 0; i < radial_grid; ++i) ss[i] = s_lo + (s_hi - s_lo) * i / (radial_grid - 1);
  for (int j = 0; j < angular_grid; ++j) phis[j] = kTwoPi * j / angular_grid;
  auto f = [&](double s, double phi) {
    const double t = std::pow(10.0, s);
    const double m = dense_sigma_min(a, std::polar(1.0 + t, phi));
    return m > 0.0 ? t / m : std::numeric_limits<double>::infinity();
  };
  return grid_maximise(ss, phis, f, [](double s, double phi) {
    return std::polar(1.0 + std::pow(10.0, s), phi);
  });
}

DenseMaximum dense_kreiss_continuous(const CMatrix& a, int real_grid, int imag_grid) {
  if (real_grid < 2 || imag_grid < 2) throw PreconditionError("dense_kreiss_continuous grid too small");
  const double norm_a = norm2(a);
  const double scale = std::max(norm_a, 1e-3);
  const double s_lo = std::log10(scale) - 6.0, s_hi = std::log10(scale) + 2.0;
  const double y_max = 1.5 * norm_a + 1.0;
  std::vector<double> ss(static_cast<std::size_t>(real_grid));
  std::vector<double> ys(static_cast<std::size_t>(imag_grid));
  for (int i = 0; i < real_grid; ++i) ss[i] = s_lo + (s_hi - s_lo) * i / (real_grid - 1);
  for (int j = 0; j < imag_grid; ++j) ys[j] = -y_max + 2.0 * y_max * j / (imag_grid - 1);
  auto f = [&](double s, double y) {
    const double x = std::pow(10.0, s);
    const double m = dense_sigma_min(a, Complex(x, y));
    return m > 0.0 ? x / m : std::numeric_limits<double>::infinity();
  };
  return grid_maximise(ss, ys, f, [](double s, double y) { return Complex(std::pow(10.0, s), y); });
}

namespace {

// Largest t in [0, t_max] with f(t) <= eps, assuming f(t_max) > eps.
template <class F>
double outermost_crossing(F&& f, double t_max, double eps) {
  constexpr int kSteps = 48;
  double outside = t_max;
  for (int k = kSteps - 1; k >= 0; --k) {
    const double t = t_max * k / kSteps;
    if (f(t) <= eps) {
      double in = t, out = outside;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (in + out);
        (f(m) <= eps ? in : out) = m;
      }
      return in;
    }
    outside = t;
  }
  return -std::numeric_limits<double>::infinity();
}

}  // namespace

DenseMaximum dense_pseudospectral_radius(const CMatrix& a, double eps, int n_angles) {
  const double t_max = norm2(a) + eps * 1.01 + 1e-12;
  auto extent = [&](double phi) {
    return outermost_crossing([&](double t) { return dense_sigma_min(a, std::polar(t, phi)); },
                              t_max, eps);
  };
  double best_phi = 0.0, best = -1.0;
  for (int j = 0; j < n_angles; ++j) {
    const double phi = kTwoPi * j / n_angles;
    const double e = extent(phi);
    if (e > best) {
      best = e;
      best_phi = phi;
    }
  }
  const double h = kTwoPi / n_angles;
  const double phi = golden_min_x(best_phi - h, best_phi + h, 1e-10, [&](double p) { return -extent(p); });
  const double refined = extent(phi);
  return refined > best ? DenseMaximum{refined, std::polar(refined, phi)}
                        : DenseMaximum{best, std::polar(best, best_phi)};
}

DenseMaximum dense_pseudospectral_abscissa(const CMatrix& a, double eps, int n_lines) {
  const double r = norm2(a) + eps * 1.01 + 1e-12;
  // Crossings measured as x + r in [0, 2r].
  auto extent = [&](double y) {
    return outermost_crossing([&](double s) { return dense_sigma_min(a, Complex(s - r, y)); },
                              2.0 * r, eps) - r;
  };
  double best_y = 0.0, best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n_lines; ++j) {
    const double y = -r + 2.0 * r * j / (n_lines - 1);
    const double e = extent(y);
    if (e > best) {
      best = e;
      best_y = y;
    }
  }
  const double h = 2.0 * r / (n_lines - 1);
  const double y = golden_min_x(best_y - h, best_y + h, 1e-10, [&](double v) { return -extent(v); });
  const double refined = extent(y);
  return refined > best ? DenseMaximum{refined, Complex(refined, y)}
                        : DenseMaximum{best, Complex(best, best_y)};
}

std::vector<double> dense_power_norms(const CMatrix& a, int t_max) {
  if (t_max < 1) throw PreconditionError("dense_power_norms needs t_max >= 1");
  std::vector<double> out;
  CMatrix p = a;
  for (int t = 1; t <= t_max; ++t) {
    out.push_back(norm2(p));
    p = p * a;
  }
  return out;
}

std::vector<double> dense_circle_crossings(const CMatrix& a, double rho, double eps, int samples) {
  return scan_roots([&](double phi) { return dense_sigma_min(a, std::polar(rho, phi)); }, 0.0,
                    kTwoPi, samples, eps);
}

std::vector<double> dense_line_crossings(const CMatrix& a, double x, double eps, double half_range,
                                         int samples) {
  return scan_roots([&](double w) { return dense_sigma_min(a, Complex(x, w)); }, -half_range,
                    half_range, samples, eps);
}

}  // namespace lowps::oracle
