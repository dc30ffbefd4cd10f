#include "lowps/transfer_operator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <arpack/arpack.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "lowps/errors.hpp"
#include "lowps/linalg.hpp"

namespace lowps {

namespace {

RVector gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  RVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

void require_stable_drift(const RMatrix& drift) {
  if (drift.rows() != drift.cols() || drift.rows() < 1)
    throw PreconditionError("drift must be a nonempty square matrix");
  const Eigen::VectorXcd ev = drift.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i)
    if (!(ev(i).real() < 0.0))
      throw PreconditionError("drift is not stable: eigenvalue " + format_point(ev(i)) +
                              " has nonnegative real part");
}

CMatrix complexify(const RMatrix& m) { return m.cast<Complex>(); }

RMatrix symmetrized(const RMatrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

void Trajectory::validate() const {
  if (states.rows() < 3) throw PreconditionError("trajectory needs at least 3 samples");
  if (states.cols() < 1) throw PreconditionError("trajectory states must have a coordinate");
  if (!states.allFinite()) throw PreconditionError("trajectory contains non-finite entries");
  if (dt && !(*dt > 0.0)) throw PreconditionError("trajectory time step must be positive");
}

double sample_trigonometric_noise(int noise_exponent, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> proposal(-0.5, 0.5), accept(0.0, 1.0);
  for (;;) {
    const double xi = proposal(rng);
    if (accept(rng) <= std::pow(std::cos(std::numbers::pi * xi), noise_exponent)) return xi;
  }
}

Trajectory simulate_logistic(Index n, int noise_exponent, std::uint64_t seed) {
  if (noise_exponent < 2 || noise_exponent % 2 != 0)
    throw PreconditionError("noise exponent must be an even integer >= 2");
  if (n < 3) throw PreconditionError("trajectory needs at least 3 samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Trajectory t;
  t.states.resize(n, 1);
  double x = unit(rng);
  for (Index i = 0; i < n; ++i) {
    t.states(i, 0) = x;
    double next = std::fmod(4.0 * x * (1.0 - x) + sample_trigonometric_noise(noise_exponent, rng), 1.0);
    if (next < 0.0) next += 1.0;
    if (next >= 1.0) next = 0.0;
    x = next;
  }
  t.meta = "logistic N=" + std::to_string(noise_exponent) + " seed=" + std::to_string(seed);
  return t;
}

RMatrix stationary_covariance(const RMatrix& drift, double sigma) {
  require_stable_drift(drift);
  const Index d = drift.rows();
  const RMatrix id = RMatrix::Identity(d, d);
  // vec(A S + S A^T) = (I kron A + A kron I) vec(S)
  RMatrix kron(d * d, d * d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j)
      kron.block(i * d, j * d, d, d) = id(i, j) * drift + drift(i, j) * id;
  const RMatrix rhs = -sigma * sigma * id;
  const RVector s = kron.fullPivLu().solve(rhs.reshaped());
  return symmetrized(s.reshaped(d, d));
}

OuStep ou_discretization(const RMatrix& drift, double sigma, double dt) {
  require_stable_drift(drift);
  if (!(dt > 0.0)) throw PreconditionError("time step must be positive");
  const Index d = drift.rows();
  // exp([[-A, sigma^2 I], [0, A^T]] dt) = [[., F12], [0, F22]] with
  // F22 = e^{A^T dt} and F22^T F12 the noise covariance.
  RMatrix f = RMatrix::Zero(2 * d, 2 * d);
  f.topLeftCorner(d, d) = -drift * dt;
  f.topRightCorner(d, d) = sigma * sigma * dt * RMatrix::Identity(d, d);
  f.bottomRightCorner(d, d) = drift.transpose() * dt;
  const RMatrix e = f.exp();
  OuStep step;
  step.transition = e.bottomRightCorner(d, d).transpose();
  step.noise_cov = symmetrized(step.transition * e.topRightCorner(d, d));
  return step;
}

Trajectory simulate_ou(Index n, const RMatrix& drift, double sigma, double dt, std::uint64_t seed) {
  if (n < 3) throw PreconditionError("trajectory needs at least 3 samples");
  if (!(sigma > 0.0)) throw PreconditionError("noise level must be positive");
  const OuStep step = ou_discretization(drift, sigma, dt);
  const RMatrix stat = stationary_covariance(drift, sigma);
  const Eigen::LLT<RMatrix> stat_chol(stat), noise_chol(step.noise_cov);
  if (stat_chol.info() != Eigen::Success || noise_chol.info() != Eigen::Success)
    throw ConvergenceError("covariance factorisation failed");
  const RMatrix ls = stat_chol.matrixL(), ln = noise_chol.matrixL();

  std::mt19937_64 rng(seed);
  const Index d = drift.rows();
  Trajectory t;
  t.states.resize(n, d);
  RVector x = ls * gaussian_vector(d, rng);
  for (Index i = 0; i < n; ++i) {
    t.states.row(i) = x.transpose();
    x = step.transition * x + ln * gaussian_vector(d, rng);
  }
  t.dt = dt;
  t.meta = "ou sigma=" + std::to_string(sigma) + " dt=" + std::to_string(dt) +
           " seed=" + std::to_string(seed);
  return t;
}

double KernelConfig::operator()(const RVector& x, const RVector& y) const {
  return std::exp(-(x - y).squaredNorm() / (2.0 * bandwidth * bandwidth));
}

double median_bandwidth(const Trajectory& traj, Index subsample) {
  traj.validate();
  const Index n = traj.size();
  const Index m = std::max<Index>(2, std::min(n, subsample));
  std::vector<Index> idx(m);
  for (Index i = 0; i < m; ++i) idx[i] = (i * n) / m;
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
  for (Index i = 0; i < m; ++i)
    for (Index j = i + 1; j < m; ++j)
      dist.push_back((traj.states.row(idx[i]) - traj.states.row(idx[j])).norm());
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  if (!(*mid > 0.0)) throw PreconditionError("median pairwise distance is zero; set a bandwidth");
  return *mid;
}

RMatrix gram_uncentered(const Trajectory& traj, const KernelConfig& kernel, int threads) {
  traj.validate();
  if (!(kernel.bandwidth > 0.0)) throw PreconditionError("kernel bandwidth must be positive");
  const Index n = traj.size();
  const RMatrix xt = traj.states.transpose();
  const double scale = 1.0 / static_cast<double>(n);
  const double inv = 1.0 / (2.0 * kernel.bandwidth * kernel.bandwidth);
  RMatrix k(n, n);
  parallel_for(static_cast<std::size_t>(n), threads, [&](std::size_t row) {
    const Index i = static_cast<Index>(row);
    for (Index j = i; j < n; ++j) {
      const double v = scale * std::exp(-(xt.col(i) - xt.col(j)).squaredNorm() * inv);
      k(i, j) = v;
      k(j, i) = v;
    }
  });
  return k;
}

RMatrix gram_centered(const Trajectory& traj, const KernelConfig& kernel, int threads) {
  RMatrix k = gram_uncentered(traj, kernel, threads);
  const RVector mean = k.rowwise().mean();
  const double grand = mean.mean();
  const Index n = k.rows();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) k(i, j) += grand - mean(i) - mean(j);
  return k;
}

RMatrix shift_down(const RMatrix& x) {
  const Index n = x.rows();
  const double c = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
  RMatrix out(n, x.cols());
  out.row(0).setZero();
  out.bottomRows(n - 1) = c * x.topRows(n - 1);
  return out;
}

RMatrix shift_up(const RMatrix& y) {
  const Index n = y.rows();
  const double c = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
  RMatrix out(n, y.cols());
  out.topRows(n - 1) = c * y.bottomRows(n - 1);
  out.row(n - 1).setZero();
  return out;
}

double RrrModel::normalization_residual() const {
  double worst = 0.0;
  for (Index i = 0; i < rank(); ++i) {
    const double q = v_r.col(i).squaredNorm() + gamma * v_r.col(i).dot(u_r.col(i));
    worst = std::max(worst, std::abs(q - 1.0));
  }
  return worst;
}

RrrModel fit_rrr(std::shared_ptr<const RMatrix> gram_ptr, double gamma, Index r,
                 const RrrOptions& opt) {
  if (!gram_ptr) throw PreconditionError("fit_rrr needs a Gram matrix");
  const RMatrix& g = *gram_ptr;
  const Index n = g.rows();
  if (g.cols() != n || n < 4) throw PreconditionError("Gram matrix must be square with n >= 4");
  if (!(gamma > 0.0)) throw PreconditionError("regularisation gamma must be positive");
  if (r < 1 || r > n - 2)
    throw PreconditionError("rank must satisfy 1 <= r <= n - 2, got r = " + std::to_string(r));

  // G + gamma I = L L^T in place, with one jittered retry. Eigen's
  // factorisation is used because some optimised BLAS builds return wrong
  // real Cholesky factors on recent CPUs.
  RMatrix chol;
  const double jitter = 1e-14 * std::max(1.0, g.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0;; ++attempt) {
    chol = g;
    chol.diagonal().array() += gamma + (attempt == 0 ? 0.0 : jitter);
    Eigen::LLT<Eigen::Ref<RMatrix>, Eigen::Lower> llt(chol);
    if (llt.info() == Eigen::Success) break;
    if (attempt == 1)
      throw PreconditionError("G + gamma I is not positive definite even with jitter " +
                              std::to_string(jitter) + "; increase gamma");
  }

  // OP = L^{-1} E^T G E G L^{-T}, similar to (G + gamma I)^{-1} E^T G E G.
  auto op = [&](const double* in, double* out) {
    RVector x = Eigen::Map<const RVector>(in, n);
    chol.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    RVector w = g.selfadjointView<Eigen::Lower>() * x;
    w = shift_down(w);
    RVector w2 = g.selfadjointView<Eigen::Lower>() * w;
    RVector y = shift_up(w2);
    chol.triangularView<Eigen::Lower>().solveInPlace(y);
    Eigen::Map<RVector>(out, n) = y;
  };

  const a_int nn = static_cast<a_int>(n);
  const a_int nev = static_cast<a_int>(r);
  a_int ncv = opt.krylov_dim > 0 ? opt.krylov_dim : static_cast<a_int>(std::max(2 * r + 1, r + 20));
  ncv = std::min<a_int>(std::max<a_int>(ncv, nev + 2), nn);
  const a_int lworkl = 3 * ncv * ncv + 6 * ncv;
  std::vector<double> resid(n), v(static_cast<std::size_t>(n * ncv)), workd(3 * n),
      workl(lworkl);
  {
    // Fixed start vector: ARPACK's own random start depends on call history.
    std::mt19937_64 rng(0x5EEDULL);
    const RVector start = gaussian_vector(n, rng);
    std::copy(start.data(), start.data() + n, resid.begin());
  }
  a_int iparam[11] = {0};
  a_int ipntr[14] = {0};
  iparam[0] = 1;
  iparam[2] = opt.max_restarts;
  iparam[6] = 1;
  a_int ido = 0, info = 1;
  for (;;) {
    dnaupd_c(&ido, "I", nn, "LR", nev, opt.tol, resid.data(), ncv, v.data(), nn, iparam, ipntr,
             workd.data(), workl.data(), lworkl, &info);
    if (ido == -1 || ido == 1) {
      op(&workd[ipntr[0] - 1], &workd[ipntr[1] - 1]);
      continue;
    }
    break;
  }
  if (info == 1 || iparam[4] < nev)
    throw ConvergenceError("Arnoldi iteration converged " + std::to_string(iparam[4]) + " of " +
                           std::to_string(r) + " eigenvalues");
  if (info != 0) throw ConvergenceError("ARPACK dnaupd failed with info = " + std::to_string(info));

  std::vector<a_int> select(ncv, 1);
  std::vector<double> dr(nev + 1), di(nev + 1), z(static_cast<std::size_t>(n * (nev + 1))),
      workev(3 * ncv);
  a_int einfo = 0;
  dneupd_c(1, "P", select.data(), dr.data(), di.data(), z.data(), nn, 0.0, 0.0, workev.data(), "I",
           nn, "LR", nev, opt.tol, resid.data(), ncv, v.data(), nn, iparam, ipntr, workd.data(),
           workl.data(), lworkl, &einfo);
  if (einfo != 0) throw ConvergenceError("ARPACK dneupd failed with info = " + std::to_string(einfo));

  // Eigenpairs come from Rayleigh-Ritz on the Schur basis left in the first
  // nconv columns of v. The Ritz vectors dneupd writes into z were found to
  // be mixtures of eigenvectors for this nonsymmetric OP.
  const a_int nconv = iparam[4];
  const Eigen::Map<const RMatrix> schur(v.data(), n, nconv);
  Eigen::HouseholderQR<RMatrix> qr(schur);
  const RMatrix basis = qr.householderQ() * RMatrix::Identity(n, nconv);
  RMatrix op_basis(n, nconv);
  for (Index j = 0; j < nconv; ++j) op(basis.col(j).data(), op_basis.col(j).data());
  Eigen::EigenSolver<RMatrix> small(basis.transpose() * op_basis);
  const CVector lam = small.eigenvalues();
  std::vector<Index> order(static_cast<std::size_t>(nconv));
  for (Index i = 0; i < nconv; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return lam(a).real() > lam(b).real(); });
  const double top = std::max(lam(order[0]).real(), 0.0);
  Index positive = 0;
  for (Index i = 0; i < nconv && positive < r; ++i) {
    const Complex l = lam(order[i]);
    if (l.real() > 1e-12 * top && std::abs(l.imag()) <= 1e-8 * top) ++positive;
    else break;
  }
  if (top <= 0.0 || positive < r)
    throw PreconditionError("only " + std::to_string(positive) +
                            " positive eigenvalues separated from zero; choose a smaller rank r");

  RrrModel m;
  m.u_r.resize(n, r);
  m.sigma_r.resize(r);
  const Eigen::MatrixXcd w = small.eigenvectors();
  for (Index i = 0; i < r; ++i) {
    m.sigma_r(i) = std::sqrt(lam(order[i]).real());
    RVector y = basis * w.col(order[i]).real();
    m.u_r.col(i) = y / y.norm();
  }
  chol.transpose().triangularView<Eigen::Upper>().solveInPlace(m.u_r);
  m.v_r = g * m.u_r;
  for (Index i = 0; i < r; ++i) {
    const double q = m.v_r.col(i).squaredNorm() + gamma * m.v_r.col(i).dot(m.u_r.col(i));
    if (!(q > 0.0)) throw ConvergenceError("eigenvector " + std::to_string(i) + " cannot be normalised");
    const double s = 1.0 / std::sqrt(q);
    m.u_r.col(i) *= s;
  }
  m.v_r = g * m.u_r;
  m.gamma = gamma;
  m.gram = std::move(gram_ptr);
  m.shift_scale = std::sqrt(static_cast<double>(n) / static_cast<double>(n - 1));
  m.centered = opt.centered;

  const RMatrix ev = shift_down(m.v_r);
  const RMatrix uv = m.v_r.transpose() * ev;
  const RMatrix vu = ev.transpose() * m.v_r;
  const RMatrix g_ev = g.selfadjointView<Eigen::Lower>() * ev;
  m.h_grams = GramCache::from_blocks(complexify(symmetrized(m.u_r.transpose() * m.v_r)),
                                     complexify(symmetrized(ev.transpose() * g_ev)),
                                     complexify(uv), complexify(vu), true);
  RMatrix jev = ev;
  if (opt.centered) jev.rowwise() -= ev.colwise().mean();
  m.l2_grams = GramCache::from_blocks(complexify(symmetrized(m.v_r.transpose() * m.v_r)),
                                      complexify(symmetrized(jev.transpose() * jev)),
                                      complexify(uv), complexify(vu), true);
  return m;
}

double mu_h(const RrrModel& model, Complex z) { return mu(model.h_grams, z); }
double mu_l2(const RrrModel& model, Complex z) { return mu(model.l2_grams, z); }

KoopGrid koop_pseudospectrum_grid(const RrrModel& model, const GridSpec& grid, int threads) {
  grid.validate(grid.size());  // point caps are the caller's policy
  KoopGrid out{grid, std::vector<double>(grid.size()), std::vector<double>(grid.size())};
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    const Complex z = grid.point(k);
    out.mu_h[k] = mu(model.h_grams, z);
    out.mu_l2[k] = mu(model.l2_grams, z);
  });
  return out;
}

KoopKreiss koop_kreiss(const RrrModel& model, Geometry geometry, const std::vector<double>& eps_list,
                       const SolverOptions& opt) {
  if (eps_list.empty()) throw PreconditionError("koop_kreiss needs at least one eps");
  KoopKreiss out;
  out.argmax_eps = std::numeric_limits<double>::infinity();
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw PreconditionError("eps values must be positive");
    const double rho = pseudospectral_radius(model.grams(geometry), eps, opt).value;
    const double ratio = (rho - 1.0) / eps;
    out.radii.push_back(rho);
    out.ratios.push_back(ratio);
    if (ratio > out.kappa) {
      out.kappa = ratio;
      out.argmax_eps = eps;
    }
  }
  return out;
}

}  // namespace lowps
