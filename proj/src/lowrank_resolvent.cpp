#include "lowps/lowrank_resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lowps/errors.hpp"
#include "lowps/linalg.hpp"

namespace lowps {

namespace {

constexpr double kOrthonormalTol = 1e-10;

double min_real_part(const CVector& ev) {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < ev.size(); ++i) best = std::min(best, ev(i).real());
  return best;
}

CVector eigenvalues_at(const CMatrix& m, Complex z) {
  try {
    return eigenvalues_or_throw(m, "reduced matrix");
  } catch (const ConvergenceError&) {
    throw ConvergenceError("reduced eigensolve did not converge at z = " + format_point(z));
  }
}

double mu_from_shifted_min(const GramCache& g, Complex z, double shifted_min) {
  if (g.clamp) shifted_min = std::min(shifted_min, 0.0);
  return std::sqrt(std::max(0.0, std::norm(z) + shifted_min));
}

void require_orthonormal(const GramCache& g) {
  const Index r = g.rank();
  const double dev = (g.uu - CMatrix::Identity(r, r)).cwiseAbs().maxCoeff();
  if (!(dev <= kOrthonormalTol)) {
    throw PreconditionError("quadratic route needs U*U = I; deviation is " + std::to_string(dev) +
                            " (orthonormalize the factors first)");
  }
}

}  // namespace

LowRankFactors::LowRankFactors(CMatrix u, CMatrix v) : u_(std::move(u)), v_(std::move(v)) {
  if (u_.rows() != v_.rows() || u_.cols() != v_.cols()) {
    throw PreconditionError("factor shapes differ: U is " + std::to_string(u_.rows()) + "x" +
                            std::to_string(u_.cols()) + ", V is " + std::to_string(v_.rows()) +
                            "x" + std::to_string(v_.cols()));
  }
  if (u_.cols() < 1) throw PreconditionError("factors need at least one column");
  if (u_.rows() <= u_.cols()) {
    throw PreconditionError("factors need more rows than columns (d > r)");
  }
  if (!u_.allFinite() || !v_.allFinite()) throw PreconditionError("factors contain NaN or Inf");
}

GramCache GramCache::from_factors(const LowRankFactors& f) {
  GramCache g;
  g.uu = f.u().adjoint() * f.u();
  g.vv = f.v().adjoint() * f.v();
  g.uv = f.u().adjoint() * f.v();
  g.vu = g.uv.adjoint();
  g.clamp = f.dim() > f.rank();
  return g;
}

GramCache GramCache::from_blocks(CMatrix uu, CMatrix vv, CMatrix uv, CMatrix vu, bool clamp) {
  const Index r = uu.rows();
  auto square = [r](const CMatrix& m) { return m.rows() == r && m.cols() == r; };
  if (r < 1 || !square(uu) || !square(vv) || !square(uv) || !square(vu)) {
    throw PreconditionError("Gram blocks must all be r x r with r >= 1");
  }
  GramCache g;
  g.uu = std::move(uu);
  g.vv = std::move(vv);
  g.uv = std::move(uv);
  g.vu = std::move(vu);
  g.clamp = clamp;
  return g;
}

GramCache GramCache::rotated(Complex c) const {
  GramCache g = *this;
  g.uv = std::conj(c) * uv;
  g.vu = c * vu;
  return g;
}

GramCache GramCache::balanced() const {
  const CMatrix herm = 0.5 * (uu + uu.adjoint());
  Eigen::LLT<CMatrix> llt(herm);
  if (llt.info() != Eigen::Success) {
    throw PreconditionError("U*U is not positive definite; cannot balance the factors");
  }
  // herm = L L*, so R = L*.
  const CMatrix r = llt.matrixU();
  const CMatrix rinv = llt.matrixU().solve(CMatrix::Identity(rank(), rank()));
  GramCache g;
  g.uu = CMatrix::Identity(rank(), rank());
  g.vv = r * vv * r.adjoint();
  g.uv = rinv.adjoint() * uv * r.adjoint();
  g.vu = r * vu * rinv;
  g.clamp = clamp;
  return g;
}

double GramCache::operator_norm() const {
  // Nonzero eigenvalues of (U*U)(V*V) are those of A A*.
  const CVector ev = eigenvalues_or_throw(uu * vv, "operator norm");
  double best = 0.0;
  for (Index i = 0; i < ev.size(); ++i) best = std::max(best, ev(i).real());
  return std::sqrt(best);
}

CVector GramCache::core_eigenvalues() const { return eigenvalues_or_throw(vu, "V*U spectrum"); }

CVector GramCache::spectrum() const {
  CVector core = core_eigenvalues();
  if (!clamp) return core;
  CVector all(core.size() + 1);
  all << core, Complex(0.0, 0.0);
  return all;
}

double GramCache::spectral_radius() const { return spectrum().cwiseAbs().maxCoeff(); }

double GramCache::spectral_abscissa() const { return spectrum().real().maxCoeff(); }

CMatrix shifted_reduced(const GramCache& g, Complex z) {
  const Index r = g.rank();
  const double z2 = std::norm(z);
  const CMatrix z_uv = z * g.uv;
  CMatrix n(2 * r, 2 * r);
  n.topLeftCorner(r, r) = -z_uv;
  CMatrix top_right = -z_uv;
  top_right.diagonal().array() += z2;
  n.topRightCorner(r, r) = top_right * g.uu;
  n.bottomLeftCorner(r, r) = g.vv;
  n.bottomRightCorner(r, r) = g.vv * g.uu - std::conj(z) * g.vu;
  return n;
}

ReducedMatrix build_reduced(const GramCache& g, Complex z) {
  CMatrix m = shifted_reduced(g, z);
  m.diagonal().array() += std::norm(z);
  return {std::move(m), z};
}

ReducedMatrix build_reduced(const LowRankFactors& f, Complex z) {
  return build_reduced(GramCache::from_factors(f), z);
}

double imaginary_residue(const ReducedMatrix& r) {
  const CVector ev = eigenvalues_at(r.m, r.z);
  const double scale = std::max(spectral_norm(r.m), std::numeric_limits<double>::min());
  return ev.imag().cwiseAbs().maxCoeff() / scale;
}

double mu(const GramCache& g, Complex z) {
  const CVector ev = eigenvalues_at(shifted_reduced(g, z), z);
  return mu_from_shifted_min(g, z, min_real_part(ev));
}

double mu(const LowRankFactors& f, Complex z) { return mu(GramCache::from_factors(f), z); }

std::vector<double> mu_grid(const GramCache& g, const GridSpec& grid, int threads) {
  grid.validate(grid.size());  // point caps are the caller's policy
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) { out[k] = mu(g, grid.point(k)); });
  return out;
}

double mu_via_gep(const GramCache& g, Complex z) {
  const Index r = g.rank();
  const double z2 = std::norm(z);
  const CMatrix id = CMatrix::Identity(r, r);
  CMatrix a = CMatrix::Zero(2 * r, 2 * r);
  a.topLeftCorner(r, r) = g.vv;
  a.topRightCorner(r, r) = z2 * id - std::conj(z) * g.vu;
  a.bottomLeftCorner(r, r) = z2 * id - z * g.uv;
  CMatrix b = CMatrix::Zero(2 * r, 2 * r);
  b.topRightCorner(r, r) = id;
  b.bottomLeftCorner(r, r) = id;
  b.bottomRightCorner(r, r) = -g.uu;

  PencilEigenvalues ev;
  try {
    ev = generalized_eigenvalues(a, b);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(e.what()) + " at z = " + format_point(z));
  }
  // b is always invertible, so every eigenvalue is finite.
  double lam_min = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < ev.alpha.size(); ++i) {
    lam_min = std::min(lam_min, (ev.alpha(i) / ev.beta(i)).real());
  }
  if (!std::isfinite(lam_min)) {
    throw ConvergenceError("pencil returned a non-finite eigenvalue at z = " + format_point(z));
  }
  return mu_from_shifted_min(g, z, lam_min - z2);
}

double mu_via_gep(const LowRankFactors& f, Complex z) {
  return mu_via_gep(GramCache::from_factors(f), z);
}

double qep_shifted_min(const GramCache& g, Complex z) {
  require_orthonormal(g);
  const double z2 = std::norm(z);
  const CMatrix c1 = z * g.uv + std::conj(z) * g.vu - g.vv;
  const CMatrix c0 = z2 * (g.vu * g.uv - g.vv);
  CVector ev;
  try {
    ev = quadratic_eigenvalues(c1, c0);
  } catch (const ConvergenceError& e) {
    throw ConvergenceError(std::string(e.what()) + " at z = " + format_point(z));
  }
  return min_real_part(ev);
}

double mu_via_qep(const GramCache& g, Complex z) {
  return mu_from_shifted_min(g, z, qep_shifted_min(g, z));
}

double mu_via_qep(const LowRankFactors& f, Complex z) {
  return mu_via_qep(GramCache::from_factors(f), z);
}

LowRankFactors orthonormalized(const LowRankFactors& f) {
  const Index d = f.dim();
  const Index r = f.rank();
  Eigen::HouseholderQR<CMatrix> qr(f.u());
  const CMatrix q = qr.householderQ() * CMatrix::Identity(d, r);
  const CMatrix rr = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  return LowRankFactors(q, f.v() * rr.adjoint());
}

EigenPair smallest_eigenpair(const GramCache& g, Complex z, const DerivativeOptions& opt) {
  const CMatrix n = shifted_reduced(g, z);
  const CVector ev = eigenvalues_at(n, z);
  const double z2 = std::norm(z);
  const double m_norm = spectral_norm(n) + z2;

  Index k = 0;
  for (Index i = 1; i < ev.size(); ++i) {
    if (ev(i).real() < ev(k).real()) k = i;
  }
  if (std::abs(ev(k).imag()) > opt.imag_tol * m_norm) {
    throw ConvergenceError("smallest reduced eigenvalue is not real at z = " + format_point(z));
  }
  double gap = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < ev.size(); ++i) {
    if (i != k) gap = std::min(gap, std::abs(ev(i) - ev(k)));
  }
  if (gap <= opt.gap_tol * m_norm) {
    throw PreconditionError("derivative undefined: smallest eigenvalue of M is not simple at z = " +
                            format_point(z));
  }

  // Both null vectors of N - lambda I come out of one SVD.
  CMatrix shifted = n;
  shifted.diagonal().array() -= ev(k);
  const ThinSvd svd = thin_svd(shifted);
  const Index last = shifted.rows() - 1;
  EigenPair out;
  out.lambda = ev(k).real() + z2;
  out.right = svd.v.col(last);
  out.left = svd.u.col(last);
  if (std::abs(out.left.dot(out.right)) < opt.min_conditioning) {
    throw PreconditionError("derivative undefined: smallest eigenvalue of M is nearly defective at z = " +
                            format_point(z));
  }
  return out;
}

namespace {

enum class Branch { modulus, eigen };

// With the clamp active and lambda_min(N) clearly positive, mu = |z|.
Branch active_branch(const GramCache& g, Complex z, const DerivativeOptions& opt) {
  if (!g.clamp) return Branch::eigen;
  const CMatrix n = shifted_reduced(g, z);
  const double lam = min_real_part(eigenvalues_at(n, z));
  const double scale = spectral_norm(n) + std::norm(z);
  return lam > opt.gap_tol * scale ? Branch::modulus : Branch::eigen;
}

double checked_real(Complex value, double scale, const DerivativeOptions& opt, Complex z) {
  if (std::abs(value.imag()) > opt.imag_tol * std::max(1.0, scale)) {
    throw ConvergenceError("derivative has a non-negligible imaginary part at z = " +
                           format_point(z));
  }
  return value.real();
}

}  // namespace

double dmu_dphi(const GramCache& g, double rho, double phi, const DerivativeOptions& opt) {
  const Complex z = std::polar(rho, phi);
  if (active_branch(g, z, opt) == Branch::modulus) return 0.0;

  const EigenPair p = smallest_eigenpair(g, z, opt);
  const double mu_val = std::sqrt(std::max(0.0, p.lambda));
  if (!(mu_val > 0.0)) {
    throw PreconditionError("derivative undefined: mu vanishes at z = " + format_point(z));
  }
  const Index r = g.rank();
  const auto x1 = p.right.head(r);
  const auto x2 = p.right.tail(r);
  const auto y1 = p.left.head(r);
  const auto y2 = p.left.tail(r);
  const Complex i_unit(0.0, 1.0);
  const CVector ux = x1 + g.uu * x2;
  const Complex num = -i_unit * z * y1.dot(g.uv * ux) + i_unit * std::conj(z) * y2.dot(g.vu * x2);
  const Complex den = p.left.dot(p.right);
  const Complex dlam = num / den;
  return checked_real(dlam, std::abs(dlam), opt, z) / (2.0 * mu_val);
}

double dmu_dphi(const LowRankFactors& f, double rho, double phi, const DerivativeOptions& opt) {
  return dmu_dphi(GramCache::from_factors(f), rho, phi, opt);
}

double dmu_domega(const GramCache& g, double a, double omega, const DerivativeOptions& opt) {
  const Complex z(a, omega);
  if (active_branch(g, z, opt) == Branch::modulus) {
    const double mod = std::abs(z);
    if (!(mod > 0.0)) throw PreconditionError("derivative undefined: mu vanishes at z = 0");
    return omega / mod;
  }

  const EigenPair p = smallest_eigenpair(g, z, opt);
  const double mu_val = std::sqrt(std::max(0.0, p.lambda));
  if (!(mu_val > 0.0)) {
    throw PreconditionError("derivative undefined: mu vanishes at z = " + format_point(z));
  }
  const Index r = g.rank();
  const auto x1 = p.right.head(r);
  const auto x2 = p.right.tail(r);
  const auto y1 = p.left.head(r);
  const auto y2 = p.left.tail(r);
  const Complex i_unit(0.0, 1.0);
  const CVector ux = x1 + g.uu * x2;
  const Complex den = p.left.dot(p.right);
  // d|z|^2 = 2 omega enters both M's diagonal (cancelled in N) and the
  // top-right block of N; mu^2 = |z|^2 + lambda(N).
  const Complex dn = 2.0 * omega * y1.dot(g.uu * x2) - i_unit * y1.dot(g.uv * ux) +
                     i_unit * y2.dot(g.vu * x2);
  const Complex dmu2 = 2.0 * omega + dn / den;
  return checked_real(dmu2, std::abs(dmu2), opt, z) / (2.0 * mu_val);
}

double dmu_domega(const LowRankFactors& f, double a, double omega, const DerivativeOptions& opt) {
  return dmu_domega(GramCache::from_factors(f), a, omega, opt);
}

std::vector<double> power_norms(const LowRankFactors& f, int t_max) {
  if (t_max < 1) throw PreconditionError("power_norms needs t_max >= 1");
  const Index r = f.rank();
  auto r_factor = [r](const CMatrix& m) -> CMatrix {
    Eigen::HouseholderQR<CMatrix> qr(m);
    return qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  };
  const CMatrix ru = r_factor(f.u());
  const CMatrix rv_adj = r_factor(f.v()).adjoint();
  const CMatrix core = f.v().adjoint() * f.u();

  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(t_max));
  CMatrix left = ru;  // R_U (V*U)^{t-1}
  for (int t = 1; t <= t_max; ++t) {
    out.push_back(spectral_norm(left * rv_adj));
    left = left * core;
  }
  return out;
}

TransientConstants transient_constants(const LowRankFactors& f, double tol) {
  const GramCache g = GramCache::from_factors(f);
  const double radius = g.core_eigenvalues().cwiseAbs().maxCoeff();
  if (!(radius < 1.0)) {
    throw PreconditionError("not asymptotically stable: spectral radius " + std::to_string(radius) +
                            " >= 1");
  }
  if (!(tol > 0.0)) throw PreconditionError("transient_constants needs tol > 0");

  const Index r = f.rank();
  auto r_factor = [r](const CMatrix& m) -> CMatrix {
    Eigen::HouseholderQR<CMatrix> qr(m);
    return qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  };
  const CMatrix ru = r_factor(f.u());
  const CMatrix rv_adj = r_factor(f.v()).adjoint();
  const CMatrix core = g.vu;

  TransientConstants out;
  out.p = 1.0;  // t = 0
  out.s = 1.0;
  out.peak_t = 0;
  double block_max = 1.0;  // max ||A^j|| for j < ell
  double q = 0.0;          // ||A^ell||
  constexpr int kMaxTerms = 10'000'000;

  CMatrix left = ru;
  for (int t = 1; t <= kMaxTerms; ++t) {
    const double norm_t = spectral_norm(left * rv_adj);
    left = left * core;
    out.terms = t;
    out.s += norm_t;
    if (norm_t > out.p) {
      out.p = norm_t;
      out.peak_t = t;
    }
    if (out.ell == 0) {
      if (norm_t < 1.0) {
        out.ell = t;
        q = norm_t;
      } else {
        block_max = std::max(block_max, norm_t);
      }
      continue;
    }
    // For t' >= T: ||A^t'|| <= block_max * q^floor(T / ell).
    const int next = t + 1;
    const double decay = std::pow(q, std::floor(static_cast<double>(next) / out.ell));
    const double peak_bound = block_max * decay;
    const double tail_bound = out.ell * block_max * decay / (1.0 - q);
    if (peak_bound <= out.p && tail_bound <= tol * out.s) return out;
  }
  throw ConvergenceError("transient_constants: power scan did not terminate");
}

double transient_sum_bound(double norm_a, double norm_a_ell, int ell) {
  if (ell < 1 || !(norm_a_ell < 1.0)) {
    throw PreconditionError("transient_sum_bound needs ell >= 1 and ||A^ell|| < 1");
  }
  double geometric = 0.0;
  double term = 1.0;
  for (int j = 0; j < ell; ++j) {
    geometric += term;
    term *= norm_a;
  }
  return geometric / (1.0 - norm_a_ell);
}

}  // namespace lowps
