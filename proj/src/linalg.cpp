#include "lowps/linalg.hpp"

#include <string>
#include <vector>

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include "lowps/errors.hpp"

namespace lowps {

PencilEigenvalues generalized_eigenvalues(const CMatrix& a, const CMatrix& b) {
  const Index n = a.rows();
  if (a.cols() != n || b.rows() != n || b.cols() != n) {
    throw PreconditionError("generalized_eigenvalues: pencil blocks must be square and equal size");
  }
  PencilEigenvalues out;
  out.alpha.resize(n);
  out.beta.resize(n);
  if (n == 0) return out;

  // LAPACK overwrites its inputs.
  CMatrix aw = a;
  CMatrix bw = b;
  Complex dummy;
  const lapack_int ln = static_cast<lapack_int>(n);
  const lapack_int info = LAPACKE_zggev(
      LAPACK_COL_MAJOR, 'N', 'N', ln, aw.data(), ln, bw.data(), ln,
      out.alpha.data(), out.beta.data(), &dummy, 1, &dummy, 1);
  if (info != 0) {
    throw ConvergenceError("zggev failed with info = " + std::to_string(info));
  }
  return out;
}

bool has_indeterminate_pair(const PencilEigenvalues& ev, double a_norm,
                            double b_norm, double tol) {
  const double ta = tol * std::max(a_norm, 1e-300);
  const double tb = tol * std::max(b_norm, 1e-300);
  for (Index i = 0; i < ev.alpha.size(); ++i) {
    if (std::abs(ev.alpha(i)) <= ta && std::abs(ev.beta(i)) <= tb) return true;
  }
  return false;
}

CVector quadratic_eigenvalues(const CMatrix& c1, const CMatrix& c0) {
  const Index n = c0.rows();
  CMatrix companion = CMatrix::Zero(2 * n, 2 * n);
  companion.topRightCorner(n, n).setIdentity();
  companion.bottomLeftCorner(n, n) = -c0;
  companion.bottomRightCorner(n, n) = -c1;
  return eigenvalues_or_throw(companion, "quadratic eigenproblem");
}

CVector eigenvalues_or_throw(const CMatrix& m, const char* where) {
  const lapack_int n = static_cast<lapack_int>(m.rows());
  CVector w(m.rows());
  if (n == 0) return w;
  CMatrix a = m;
  Complex dummy;
  const lapack_int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, a.data(), n, w.data(),
                                        &dummy, 1, &dummy, 1);
  if (info != 0)
    throw ConvergenceError(std::string("eigensolver did not converge: ") + where +
                           " (info " + std::to_string(info) + ")");
  return w;
}

RVector singular_values(const CMatrix& m) {
  const lapack_int rows = static_cast<lapack_int>(m.rows());
  const lapack_int cols = static_cast<lapack_int>(m.cols());
  RVector s(std::min(m.rows(), m.cols()));
  if (s.size() == 0) return s;
  CMatrix w = m;
  Complex dummy;
  const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', rows, cols, w.data(), rows,
                                         s.data(), &dummy, 1, &dummy, 1);
  if (info != 0) throw ConvergenceError("zgesdd failed with info = " + std::to_string(info));
  return s;
}

ThinSvd thin_svd(const CMatrix& m) {
  const lapack_int rows = static_cast<lapack_int>(m.rows());
  const lapack_int cols = static_cast<lapack_int>(m.cols());
  const Index p = std::min(m.rows(), m.cols());
  ThinSvd out{CMatrix(m.rows(), p), RVector(p), CMatrix(m.cols(), p)};
  if (p == 0) return out;
  CMatrix w = m;
  CMatrix vt(p, m.cols());
  const lapack_int info =
      LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, w.data(), rows, out.s.data(), out.u.data(),
                     rows, vt.data(), static_cast<lapack_int>(p));
  if (info != 0) throw ConvergenceError("zgesdd failed with info = " + std::to_string(info));
  out.v = vt.adjoint();
  return out;
}

double spectral_norm(const CMatrix& m) {
  if (m.size() == 0) return 0.0;
  return singular_values(m)(0);
}

}  // namespace lowps
