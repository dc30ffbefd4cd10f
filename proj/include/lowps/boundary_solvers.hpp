#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lowps/lowrank_resolvent.hpp"
#include "lowps/types.hpp"

namespace lowps {

struct IntersectionOptions {
  double unit_tol = 1e-6;    // accepted ||lambda| - 1| for circle eigenvalues
  double real_tol = 1e-6;    // accepted |Im w| / (1 + |w|) for line eigenvalues
  double verify_tol = 1e-8;  // accepted |mu - eps| / max(1, eps)
  bool polish = true;        // Newton refinement before verification
};

struct CircleIntersections {
  double rho = 0.0;
  double epsilon = 0.0;
  std::vector<double> angles;     // ascending in [0, 2 pi)
  std::vector<double> residuals;  // |mu(rho e^{i phi}) - eps|
};

struct LineIntersections {
  double a = 0.0;
  double epsilon = 0.0;
  std::vector<double> omegas;  // ascending
  std::vector<double> residuals;
};

// Points rho e^{i phi} on the circle where mu equals eps. Throws
// PreconditionError("irregular pencil ...") if the pencil is singular both
// at eps and at a relative perturbation of 1e-12.
CircleIntersections circle_intersections(const GramCache& g, double rho, double eps,
                                         const IntersectionOptions& opt = {});
CircleIntersections circle_intersections(const LowRankFactors& f, double rho, double eps,
                                         const IntersectionOptions& opt = {});

// Points a + i omega on the vertical line where mu equals eps.
LineIntersections line_intersections(const GramCache& g, double a, double eps,
                                     const IntersectionOptions& opt = {});
LineIntersections line_intersections(const LowRankFactors& f, double a, double eps,
                                     const IntersectionOptions& opt = {});

// Largest t >= 0 with mu(t e^{i theta}) = eps, if the ray meets the level set.
std::optional<double> ray_extent(const GramCache& g, double theta, double eps,
                                 const IntersectionOptions& opt = {});

// Largest x with mu(x + i y) = eps, if the horizontal line meets the level set.
std::optional<double> horizontal_extent(const GramCache& g, double y, double eps,
                                        const IntersectionOptions& opt = {});

struct SolverOptions {
  double tol = 1e-10;  // relative change that ends the iteration
  int max_iter = 100;
  IntersectionOptions intersections;
};

struct ExtremalPoint {
  double value = 0.0;  // rho_eps or alpha_eps
  Complex point;
  int iterations = 0;
  std::vector<double> trace;  // nondecreasing iterates
};

// max |z| over the eps-pseudospectrum, by criss-cross iteration.
ExtremalPoint pseudospectral_radius(const GramCache& g, double eps, const SolverOptions& opt = {});
ExtremalPoint pseudospectral_radius(const LowRankFactors& f, double eps,
                                    const SolverOptions& opt = {});

// max Re z over the eps-pseudospectrum, by criss-cross iteration.
ExtremalPoint pseudospectral_abscissa(const GramCache& g, double eps,
                                      const SolverOptions& opt = {});
ExtremalPoint pseudospectral_abscissa(const LowRankFactors& f, double eps,
                                      const SolverOptions& opt = {});

struct TracePoint {
  double iterate;
  double value;
};

struct StabilityReport {
  double value = 0.0;
  Complex argpoint;
  int iterations = 0;
  std::vector<TracePoint> trace;
  bool converged = false;
  double bracket_width = 0.0;
  // Kreiss: maximising eps (infinite when the supremum is the limit 1).
  double argmax_epsilon = 0.0;
  // Independent estimate: derivative descent for the distance to
  // instability, a search of the resolvent ratio along the maximising ray or
  // line for the Kreiss constants.
  double cross_check = 0.0;
};

struct StabilityOptions {
  double tol = 1e-10;
  int max_iter = 200;
  int scan_points = 360;  // coarse unit-circle scan for the initial bracket
  SolverOptions inner;
};

// min over the unit circle of mu, by bisection on eps with circle
// intersections deciding membership. Requires spectral radius < 1.
StabilityReport distance_to_instability(const GramCache& g, const StabilityOptions& opt = {});
StabilityReport distance_to_instability(const LowRankFactors& f, const StabilityOptions& opt = {});

struct KreissOptions {
  int scan_points = 20;
  // Times ||A||. Below about 1e-7 ||A|| the reduced route cannot resolve
  // mu: its absolute error is about machine eps ||A||^2 / mu.
  double eps_lo_factor = 1e-6;
  double eps_hi_factor = 1e4;
  double log_tol = 1e-7;        // bracket width in log(eps)
  int max_iter = 200;
  SolverOptions inner;
};

// sup over eps of (rho_eps - 1) / eps, at least 1. Requires spectral radius < 1.
StabilityReport kreiss_discrete(const GramCache& g, const KreissOptions& opt = {});
StabilityReport kreiss_discrete(const LowRankFactors& f, const KreissOptions& opt = {});

// sup over eps of alpha_eps / eps, at least 1. Requires every eigenvalue of
// V*U in the open left half-plane.
StabilityReport kreiss_continuous(const GramCache& g, const KreissOptions& opt = {});
StabilityReport kreiss_continuous(const LowRankFactors& f, const KreissOptions& opt = {});

// (kappa, e d kappa) for finite d, (kappa, e kappa^2 / 2) otherwise.
std::pair<double, double> kreiss_transient_bounds(double kappa, std::optional<Index> d);

}  // namespace lowps
