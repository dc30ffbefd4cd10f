#pragma once

#include <vector>

#include "lowps/grid.hpp"
#include "lowps/types.hpp"

// Dense reference computations. Every routine here uses full SVDs or
// explicit matrix powers and never the reduced formulas, so they can judge
// the low-rank code paths. Cost is O(d^3) per sample.
namespace lowps::oracle {

double dense_sigma_min(const CMatrix& a, Complex z);

// sigma_min(zI - A) at every grid point, in GridSpec point order.
std::vector<double> dense_sigma_grid(const CMatrix& a, const GridSpec& grid, int threads = 1);

// masks[l][k] is true when sigma_min at point k is <= eps_levels[l].
std::vector<std::vector<bool>> dense_pseudospectrum_grid(const CMatrix& a, const GridSpec& grid,
                                                         const std::vector<double>& eps_levels,
                                                         int threads = 1);

struct DenseMinimum {
  double value;
  double angle;
};

// min over n_angles samples of the unit circle, polished by golden section to
// polish_tol in angle around every sampled local minimum.
DenseMinimum dense_distance_to_instability(const CMatrix& a, int n_angles, double polish_tol = 1e-12);

struct DenseMaximum {
  double value;
  Complex point;
};

// max of (|z| - 1) / sigma_min over |z| = 1 + 10^s (s on radial_grid points
// spanning [-6, log10(r_max - 1)]) times angular_grid angles, followed by
// coordinate golden-section refinement of the best few grid points. The
// result is at least 1.
DenseMaximum dense_kreiss(const CMatrix& a, int radial_grid, int angular_grid);

// max of Re z / sigma_min over Re z > 0 on a log-real by linear-imaginary
// grid, refined the same way; at least 1.
DenseMaximum dense_kreiss_continuous(const CMatrix& a, int real_grid, int imag_grid);

// max |z| over {sigma_min <= eps}: outermost crossing along n_angles rays
// (coarse inward scan from ||A|| + eps, then bisection), refined by golden
// section in angle around the best ray.
DenseMaximum dense_pseudospectral_radius(const CMatrix& a, double eps, int n_angles);

// max Re z over {sigma_min <= eps}: rightmost crossing along n_lines
// horizontal lines, refined the same way.
DenseMaximum dense_pseudospectral_abscissa(const CMatrix& a, double eps, int n_lines);

// ||A^t|| for t = 1..t_max from explicit powers.
std::vector<double> dense_power_norms(const CMatrix& a, int t_max);

// Roots of f - level on [lo, hi] located by sign changes over `samples`
// equally spaced points and refined by bisection.
template <class F>
std::vector<double> scan_roots(F&& f, double lo, double hi, int samples, double level) {
  std::vector<double> roots;
  double x_prev = lo;
  double f_prev = f(lo) - level;
  for (int j = 1; j <= samples; ++j) {
    const double x = lo + (hi - lo) * j / samples;
    const double fx = f(x) - level;
    if (f_prev == 0.0) {
      roots.push_back(x_prev);
    } else if ((f_prev < 0.0) != (fx < 0.0) && fx != 0.0) {
      double a = x_prev, b = x, fa = f_prev;
      for (int it = 0; it < 100 && b - a > 1e-15 * (1.0 + std::abs(b)); ++it) {
        const double m = 0.5 * (a + b);
        const double fm = f(m) - level;
        if ((fm < 0.0) == (fa < 0.0)) {
          a = m;
          fa = fm;
        } else {
          b = m;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x_prev = x;
    f_prev = fx;
  }
  return roots;
}

// Angles in [0, 2 pi) where sigma_min(rho e^{i phi} I - A) = eps.
std::vector<double> dense_circle_crossings(const CMatrix& a, double rho, double eps, int samples);

// Ordinates in [-half_range, half_range] where sigma_min((x + i w) I - A) = eps.
std::vector<double> dense_line_crossings(const CMatrix& a, double x, double eps, double half_range,
                                         int samples);

}  // namespace lowps::oracle
