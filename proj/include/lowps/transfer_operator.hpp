#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lowps/boundary_solvers.hpp"
#include "lowps/grid.hpp"
#include "lowps/lowrank_resolvent.hpp"
#include "lowps/types.hpp"

namespace lowps {

// Time-ordered samples, one row per step.
struct Trajectory {
  RMatrix states;
  std::optional<double> dt;
  std::string meta;

  Index size() const { return states.rows(); }
  Index state_dim() const { return states.cols(); }

  // Throws PreconditionError unless n >= 3 and every entry is finite.
  void validate() const;
};

// x_{t+1} = (4 x_t (1 - x_t) + xi_t) mod 1 with xi_t drawn from the density
// proportional to cos^N(pi xi) on [-1/2, 1/2] by rejection from the uniform
// proposal. x_0 is uniform on [0, 1).
Trajectory simulate_logistic(Index n, int noise_exponent, std::uint64_t seed);

// One draw of the trigonometric noise, exposed for testing the sampler.
double sample_trigonometric_noise(int noise_exponent, std::mt19937_64& rng);

// Solution of A S + S A^T = -sigma^2 I. Throws PreconditionError unless
// every eigenvalue of A has negative real part.
RMatrix stationary_covariance(const RMatrix& drift, double sigma);

struct OuStep {
  RMatrix transition;  // e^{A dt}
  RMatrix noise_cov;   // integral_0^dt e^{A s} sigma^2 e^{A^T s} ds
};

// Exact discretisation of dX = A X dt + sigma dW over one step.
OuStep ou_discretization(const RMatrix& drift, double sigma, double dt);

// Exact Gaussian discretisation of the Ornstein-Uhlenbeck process started
// from its stationary law.
Trajectory simulate_ou(Index n, const RMatrix& drift, double sigma, double dt, std::uint64_t seed);

// k(x, y) = exp(-|x - y|^2 / (2 bandwidth^2)).
struct KernelConfig {
  double bandwidth = 1.0;
  double operator()(const RVector& x, const RVector& y) const;
};

// Median pairwise distance over up to `subsample` evenly spaced states.
double median_bandwidth(const Trajectory& traj, Index subsample = 1000);

// (1/n) [k(x_i, x_j)].
RMatrix gram_uncentered(const Trajectory& traj, const KernelConfig& kernel, int threads = 0);

// J K J with J = I - 1 1^T / n, so rows and columns sum to zero.
RMatrix gram_centered(const Trajectory& traj, const KernelConfig& kernel, int threads = 0);

// x -> E x and y -> E^T y for the scaled shift E = sqrt(n/(n-1)) [e_2 | ... | e_n | 0].
RMatrix shift_down(const RMatrix& x);
RMatrix shift_up(const RMatrix& y);

enum class Geometry { rkhs, l2 };

struct RrrOptions {
  // True when the Gram is the centered one; the L2 blocks then project
  // with J.
  bool centered = true;
  double tol = 1e-13;       // Arnoldi residual tolerance
  int max_restarts = 3000;  // Arnoldi update iterations
  int krylov_dim = 0;       // 0 selects max(2r + 1, r + 20), capped at n
};

struct RrrModel {
  RMatrix u_r;          // n x r
  RMatrix v_r;          // gram * u_r
  RVector sigma_r;      // descending, positive
  double gamma = 0.0;
  std::shared_ptr<const RMatrix> gram;
  double shift_scale = 1.0;  // sqrt(n/(n-1))
  bool centered = true;
  GramCache h_grams;    // estimator as an operator on the RKHS
  GramCache l2_grams;   // estimator in the L2(pi) geometry

  Index rank() const { return u_r.cols(); }
  const GramCache& grams(Geometry g) const { return g == Geometry::rkhs ? h_grams : l2_grams; }

  // Eigenvalues of the estimator (the same in both geometries).
  CVector eigenvalues() const { return h_grams.core_eigenvalues(); }

  // max_i |u_i^T G (G + gamma I) u_i - 1|.
  double normalization_residual() const;
};

// Top-r solutions of E^T G E G u = s^2 (G + gamma I) u, normalised so that
// u^T G (G + gamma I) u = 1, with V_r = G U_r. The pencil is reduced by a
// Cholesky factor of G + gamma I and the r largest eigenvalues are taken
// from implicitly restarted Arnoldi (ARPACK). Throws PreconditionError when
// fewer than r eigenvalues are positive, ConvergenceError when Arnoldi stops
// early.
RrrModel fit_rrr(std::shared_ptr<const RMatrix> gram, double gamma, Index r,
                 const RrrOptions& opt = {});

double mu_h(const RrrModel& model, Complex z);

// The L2 blocks use V_r^T E^T J E V_r in place of V_r^T E^T P E V_r, P the
// projector onto the range of the Gram. The two agree when that range
// contains E V_r, for example when the centered Gram has rank n - 1. A
// numerically rank-deficient Gram (wide kernel, few samples) breaks this.
double mu_l2(const RrrModel& model, Complex z);

struct KoopGrid {
  GridSpec grid;
  std::vector<double> mu_h;
  std::vector<double> mu_l2;
};

KoopGrid koop_pseudospectrum_grid(const RrrModel& model, const GridSpec& grid, int threads = 0);

struct KoopKreiss {
  double kappa = 1.0;
  double argmax_eps = 0.0;  // infinite when the lower bound 1 is the maximum
  std::vector<double> radii;   // rho_eps per listed eps
  std::vector<double> ratios;  // (rho_eps - 1) / eps
};

// max over eps_list of (rho_eps - 1) / eps for the estimator in the chosen
// geometry, at least 1.
KoopKreiss koop_kreiss(const RrrModel& model, Geometry geometry, const std::vector<double>& eps_list,
                       const SolverOptions& opt = {});

}  // namespace lowps
