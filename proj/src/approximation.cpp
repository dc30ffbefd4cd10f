#include "lowps/approximation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "lowps/errors.hpp"
#include "lowps/linalg.hpp"

namespace lowps {

namespace {

CMatrix gaussian_block(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = Complex(n(rng), n(rng));
  return m;
}

CMatrix blockwise(const LinearOperatorHandle::Block& f, const CMatrix& w, Index out_rows,
                  Index block) {
  CMatrix out(out_rows, w.cols());
  for (Index j = 0; j < w.cols(); j += block) {
    const Index n = std::min(block, w.cols() - j);
    CMatrix part = f(w.middleCols(j, n));
    if (part.rows() != out_rows || part.cols() != n)
      throw PreconditionError("operator block returned " + std::to_string(part.rows()) + " x " +
                              std::to_string(part.cols()) + ", expected " +
                              std::to_string(out_rows) + " x " + std::to_string(n));
    out.middleCols(j, n) = part;
  }
  return out;
}

constexpr std::uint64_t kReseed = 0x9E3779B97F4A7C15ULL;

}  // namespace

TruncatedSvd truncate_svd(const CMatrix& a, Index l) {
  if (a.rows() != a.cols()) throw PreconditionError("truncate_svd needs a square matrix");
  const Index d = a.rows();
  if (l < 1 || l >= d)
    throw PreconditionError("truncation rank must satisfy 1 <= l < d, got l = " +
                            std::to_string(l) + ", d = " + std::to_string(d));
  const ThinSvd svd = thin_svd(a);
  return TruncatedSvd{svd.u.leftCols(l), svd.s.head(l), svd.v.leftCols(l), svd.s(l)};
}

LocalizationSet::LocalizationSet(LowRankFactors f, double inflation_, double confidence_)
    : factors(std::move(f)),
      grams(GramCache::from_factors(factors)),
      inflation(inflation_),
      confidence(confidence_) {
  if (!(inflation >= 0.0) || !std::isfinite(inflation))
    throw PreconditionError("inflation must be finite and nonnegative");
  if (!(confidence > 0.0 && confidence <= 1.0))
    throw PreconditionError("confidence must lie in (0, 1]");
}

LocalizationSet localization_from_truncation(const TruncatedSvd& ts) {
  return LocalizationSet(LowRankFactors(ts.u_l, ts.v_l * ts.sigma_l.asDiagonal()), ts.tail_norm,
                         1.0);
}

bool contains(const LocalizationSet& set, Complex z, double eps) {
  return mu(set.grams, z) <= set.inflation + eps;
}

bool membership_via_qep(const TruncatedSvd& ts, Complex z, double eps) {
  const Index l = ts.sigma_l.size();
  const CMatrix vs = ts.v_l * ts.sigma_l.asDiagonal();
  const CMatrix uv = ts.u_l.adjoint() * vs;
  const CMatrix vv = ts.sigma_l.array().square().matrix().cast<Complex>().asDiagonal();
  const GramCache g = GramCache::from_blocks(CMatrix::Identity(l, l), vv, uv, uv.adjoint(),
                                             ts.u_l.rows() > l);
  double shifted = qep_shifted_min(g, z);
  if (g.clamp) shifted = std::min(shifted, 0.0);
  const double level = ts.tail_norm + eps;
  return std::max(0.0, std::norm(z) + shifted) <= level * level;
}

LinearOperatorHandle::LinearOperatorHandle(Index rows, Index cols, Block apply,
                                           Block apply_adjoint, Index block_size)
    : rows_(rows),
      cols_(cols),
      apply_(std::move(apply)),
      apply_adjoint_(std::move(apply_adjoint)),
      block_size_(block_size) {
  if (rows < 1 || cols < 1) throw PreconditionError("operator dimensions must be positive");
  if (block_size < 1) throw PreconditionError("block size must be positive");
  if (!apply_ || !apply_adjoint_) throw PreconditionError("operator actions must be set");
}

LinearOperatorHandle LinearOperatorHandle::from_dense(CMatrix a, Index block_size) {
  auto m = std::make_shared<const CMatrix>(std::move(a));
  LinearOperatorHandle h(
      m->rows(), m->cols(), [m](const CMatrix& w) -> CMatrix { return *m * w; },
      [m](const CMatrix& y) -> CMatrix { return m->adjoint() * y; }, block_size);
  h.dense_ = m;
  return h;
}

CMatrix LinearOperatorHandle::apply(const CMatrix& w) const {
  if (w.rows() != cols_) throw PreconditionError("operator input has the wrong row count");
  return blockwise(apply_, w, rows_, block_size_);
}

CMatrix LinearOperatorHandle::apply_adjoint(const CMatrix& y) const {
  if (y.rows() != rows_) throw PreconditionError("adjoint input has the wrong row count");
  return blockwise(apply_adjoint_, y, cols_, block_size_);
}

double LinearOperatorHandle::adjoint_mismatch(std::uint64_t seed, int probes) const {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int p = 0; p < probes; ++p) {
    const CMatrix w = gaussian_block(cols_, 1, rng);
    const CMatrix y = gaussian_block(rows_, 1, rng);
    const CMatrix aw = apply(w);
    const CMatrix ay = apply_adjoint(y);
    const Complex lhs = (y.adjoint() * aw)(0, 0);
    const Complex rhs = (ay.adjoint() * w)(0, 0);
    const double scale = aw.norm() * y.norm() + w.norm() * ay.norm();
    if (scale > 0.0) worst = std::max(worst, std::abs(lhs - rhs) / scale);
  }
  return worst;
}

RangeFinderResult gaussian_rangefinder(const LinearOperatorHandle& op, Index k,
                                       std::uint64_t seed, int power_iterations) {
  if (k < 1 || k >= op.rows() || k > op.cols())
    throw PreconditionError("sketch size must satisfy 1 <= k < d, got k = " + std::to_string(k));
  RangeFinderResult out;
  out.seed_used = seed;
  CMatrix y;
  for (int attempt = 0;; ++attempt) {
    std::mt19937_64 rng(out.seed_used);
    y = op.apply(gaussian_block(op.cols(), k, rng));
    if (y.allFinite() && y.norm() > 0.0) break;
    if (attempt == 1)
      throw ConvergenceError("rank collapse: the Gaussian sketch vanished for two seeds");
    out.seed_used = seed + kReseed;
    out.retried = true;
  }
  Eigen::HouseholderQR<CMatrix> qr(y);
  out.q = qr.householderQ() * CMatrix::Identity(y.rows(), k);

  std::mt19937_64 rng(out.seed_used ^ kReseed);
  CMatrix x = gaussian_block(op.cols(), 1, rng);
  x /= x.norm();
  auto residual = [&](const CMatrix& v) {
    CMatrix r = op.apply(v);
    r -= out.q * (out.q.adjoint() * r);
    return r;
  };
  for (int it = 0; it < power_iterations; ++it) {
    const CMatrix back = op.apply_adjoint(residual(x));
    const double n = back.norm();
    if (n == 0.0) break;
    x = back / n;
  }
  out.residual_estimate = residual(x).norm();
  return out;
}

double gaussian_alpha(const RVector& sigmas_tail, Index l, Index k, double delta) {
  if (l < 1 || !(l < k - 1))
    throw PreconditionError("gaussian_alpha needs 1 <= l < k - 1, got l = " + std::to_string(l) +
                            ", k = " + std::to_string(k));
  if (!(delta > 0.0 && delta <= 1.0)) throw PreconditionError("delta must lie in (0, 1]");
  if ((sigmas_tail.array() < 0.0).any()) throw PreconditionError("singular values must be >= 0");
  if (sigmas_tail.size() == 0) return 0.0;
  const double ld = static_cast<double>(l), kd = static_cast<double>(k);
  const double lead = (1.0 + std::sqrt(ld / (kd - ld - 1.0))) * sigmas_tail(0);
  const double tail = std::numbers::e * std::sqrt(kd) / (kd - ld) * sigmas_tail.norm();
  return (lead + tail) / delta;
}

double srtt_alpha(double sigma_next, Index d, Index k) {
  if (k < 1 || k > d) throw PreconditionError("srtt_alpha needs 1 <= k <= d");
  return (1.0 + 3.0 * std::sqrt(static_cast<double>(d) / static_cast<double>(k))) * sigma_next;
}

double srtt_confidence(Index l) {
  if (l < 1) throw PreconditionError("srtt_confidence needs l >= 1");
  return 1.0 - 1.0 / static_cast<double>(l);
}

LocalizationSet randomized_localization(const LinearOperatorHandle& op, Index l, Index k,
                                        double delta, std::uint64_t seed) {
  const Index d = op.rows();
  if (op.cols() != d) throw PreconditionError("randomized_localization needs a square operator");
  if (!(k < d)) throw PreconditionError("sketch size must be below the dimension");
  const RangeFinderResult rf = gaussian_rangefinder(op, k, seed);
  // Q*A = (A* Q)*
  const ThinSvd svd = thin_svd(op.apply_adjoint(rf.q).adjoint());

  RVector tail(k - l + (d - k));
  tail.head(k - l) = svd.s.segment(l, k - l);
  tail.tail(d - k).setConstant(rf.residual_estimate);
  const double alpha = gaussian_alpha(tail, l, k, delta);

  LowRankFactors f(rf.q * svd.u.leftCols(l), svd.v.leftCols(l) * svd.s.head(l).asDiagonal());
  const double sigma_next = svd.s(l);
  LocalizationSet set(std::move(f), sigma_next + alpha, 1.0 - delta);
  set.mode = InflationMode::estimated;
  set.sigma_next = sigma_next;
  set.alpha = alpha;
  set.residual_estimate = rf.residual_estimate;
  if (const CMatrix* a = op.dense()) set.certified_inflation = spectral_norm(*a - set.factors.dense());
  return set;
}

double perturbation_inclusion(double eps, double gap_norm) {
  if (!(eps >= 0.0) || !(gap_norm >= 0.0))
    throw PreconditionError("levels and gaps must be nonnegative");
  return eps + gap_norm;
}

double kreiss_perturbation_bound(double kappa_a, double delta_a, double gap_norm) {
  if (!(kappa_a >= 1.0)) throw PreconditionError("a Kreiss constant is at least 1");
  if (!(gap_norm >= 0.0)) throw PreconditionError("gap norm must be nonnegative");
  if (!(gap_norm < delta_a))
    throw PreconditionError("bound inapplicable: ||A - B|| = " + std::to_string(gap_norm) +
                            " is not below the distance to instability " +
                            std::to_string(delta_a));
  return gap_norm / (delta_a - gap_norm);
}

}  // namespace lowps
