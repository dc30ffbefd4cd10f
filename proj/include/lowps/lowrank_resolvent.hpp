#pragma once

#include <vector>

#include "lowps/grid.hpp"
#include "lowps/types.hpp"

namespace lowps {

// A = U V* with U, V of size d x r, d > r >= 1.
class LowRankFactors {
 public:
  // Throws PreconditionError on a shape mismatch, r < 1, d <= r or a
  // non-finite entry.
  LowRankFactors(CMatrix u, CMatrix v);

  const CMatrix& u() const { return u_; }
  const CMatrix& v() const { return v_; }
  Index dim() const { return u_.rows(); }
  Index rank() const { return u_.cols(); }

  CMatrix dense() const { return u_ * v_.adjoint(); }

 private:
  CMatrix u_;
  CMatrix v_;
};

// The four r x r Gram blocks U*U, V*V, U*V, V*U. Everything downstream of
// the factors works on these, so operators whose factors live in another
// inner-product space plug in by supplying their own blocks.
//
// `clamp` records that the ambient space is larger than the rank, so zI - A
// has |z| among its singular values.
struct GramCache {
  CMatrix uu;
  CMatrix vv;
  CMatrix uv;
  CMatrix vu;
  bool clamp = true;

  Index rank() const { return uu.rows(); }

  static GramCache from_factors(const LowRankFactors& f);
  static GramCache from_blocks(CMatrix uu, CMatrix vv, CMatrix uv, CMatrix vu, bool clamp = true);

  // Blocks of (cU, V) for |c| = 1, for which mu(c z) equals mu(z) of the
  // original pair.
  GramCache rotated(Complex c) const;

  // Equivalent split A = (U R^-1)(V R*)* with U*U = R*R, so that the new
  // U*U is the identity. Throws PreconditionError if U*U is not positive
  // definite.
  GramCache balanced() const;

  // ||U V*|| in the spectral norm.
  double operator_norm() const;

  // Eigenvalues of V*U, the nonzero part of the spectrum of U V*.
  CVector core_eigenvalues() const;

  // Spectrum of U V*, including 0 when the ambient dimension exceeds r.
  CVector spectrum() const;
  double spectral_radius() const;
  double spectral_abscissa() const;
};

struct ReducedMatrix {
  CMatrix m;
  Complex z;
};

ReducedMatrix build_reduced(const LowRankFactors& f, Complex z);
ReducedMatrix build_reduced(const GramCache& g, Complex z);

// M(z) - |z|^2 I, formed blockwise without the cancelling diagonal.
CMatrix shifted_reduced(const GramCache& g, Complex z);

// max |Im lambda| / ||M|| over the eigenvalues of M.
double imaginary_residue(const ReducedMatrix& r);

// sigma_min(zI - U V*). Throws ConvergenceError carrying z if the 2r x 2r
// eigensolve fails.
double mu(const GramCache& g, Complex z);
double mu(const LowRankFactors& f, Complex z);

// mu at every grid point, in GridSpec point order.
std::vector<double> mu_grid(const GramCache& g, const GridSpec& grid, int threads = 0);

// Same value through the Hermitian pencil of dimension 2r.
double mu_via_gep(const GramCache& g, Complex z);
double mu_via_gep(const LowRankFactors& f, Complex z);

// Same value through the r x r quadratic eigenproblem, which needs U*U = I
// to 1e-10 (PreconditionError otherwise).
double mu_via_qep(const GramCache& g, Complex z);
double mu_via_qep(const LowRankFactors& f, Complex z);

// Smallest real eigenvalue of the shifted quadratic eigenproblem, that is
// lambda_min(M) - |z|^2 before clamping. Requires U*U = I.
double qep_shifted_min(const GramCache& g, Complex z);

// U = QR, V <- V R*: same product, orthonormal first factor.
LowRankFactors orthonormalized(const LowRankFactors& f);

struct EigenPair {
  double lambda;  // eigenvalue of M(z)
  CVector right;
  CVector left;
};

struct DerivativeOptions {
  double gap_tol = 1e-10;   // relative to ||M||
  double imag_tol = 1e-8;   // relative to ||M||
  // Lower bound on |y* x| for the unit eigenvectors; near a defective
  // (Jordan) eigenvalue it tends to zero while the computed gap can stay
  // around sqrt(machine eps).
  double min_conditioning = 1e-6;
};

// Smallest eigenvalue of M(z) with unit right and left eigenvectors. Throws
// PreconditionError("derivative undefined ...") when it is not separated
// from the rest of the spectrum by gap_tol * ||M|| or is nearly defective.
EigenPair smallest_eigenpair(const GramCache& g, Complex z, const DerivativeOptions& opt = {});

// d mu / d phi at z = rho e^{i phi}.
double dmu_dphi(const GramCache& g, double rho, double phi, const DerivativeOptions& opt = {});
double dmu_dphi(const LowRankFactors& f, double rho, double phi, const DerivativeOptions& opt = {});

// d mu / d omega at z = a + i omega.
double dmu_domega(const GramCache& g, double a, double omega, const DerivativeOptions& opt = {});
double dmu_domega(const LowRankFactors& f, double a, double omega, const DerivativeOptions& opt = {});

// ||A^t|| for t = 1..t_max from the r x r cores.
std::vector<double> power_norms(const LowRankFactors& f, int t_max);

struct TransientConstants {
  double p = 1.0;    // sup over t >= 0 of ||A^t||
  double s = 0.0;    // sum over t >= 0 of ||A^t||
  int ell = 0;       // smallest t >= 1 with ||A^t|| < 1
  int peak_t = 0;    // where p is attained
  int terms = 0;     // number of powers evaluated
};

// Scans powers until the geometric tail bound that kicks in at ell is below
// tol relative to the running values. Throws PreconditionError if the
// spectral radius is not below one.
TransientConstants transient_constants(const LowRankFactors& f, double tol = 1e-12);

// (sum_{j<ell} ||A||^j) / (1 - ||A^ell||), an upper bound on s.
double transient_sum_bound(double norm_a, double norm_a_ell, int ell);

}  // namespace lowps
