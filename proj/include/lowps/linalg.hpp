#pragma once

#include "lowps/types.hpp"

namespace lowps {

// Homogeneous eigenvalues (alpha_i, beta_i) of the pencil a - lambda b.
struct PencilEigenvalues {
  CVector alpha;
  CVector beta;
};

// Solves a x = lambda b x by the QZ algorithm. Throws ConvergenceError on
// failure of the LAPACK driver.
PencilEigenvalues generalized_eigenvalues(const CMatrix& a, const CMatrix& b);

// True if some pair has both |alpha| and |beta| below tol times the
// corresponding matrix norm, the signature of a singular pencil.
bool has_indeterminate_pair(const PencilEigenvalues& ev, double a_norm,
                            double b_norm, double tol = 1e-12);

// Eigenvalues of the monic quadratic lambda^2 I + lambda c1 + c0 through the
// first companion linearisation [[0, I], [-c0, -c1]].
CVector quadratic_eigenvalues(const CMatrix& c1, const CMatrix& c0);

// Eigenvalues of a general complex matrix; throws ConvergenceError naming
// `where` on failure.
CVector eigenvalues_or_throw(const CMatrix& m, const char* where);

// Singular values in descending order (LAPACK zgesdd, no vectors).
RVector singular_values(const CMatrix& m);

struct ThinSvd {
  CMatrix u;  // rows x p
  RVector s;  // p = min(rows, cols), descending
  CMatrix v;  // cols x p
};

// m = u diag(s) v* (LAPACK zgesdd, economy size).
ThinSvd thin_svd(const CMatrix& m);

// Largest singular value.
double spectral_norm(const CMatrix& m);

}  // namespace lowps
