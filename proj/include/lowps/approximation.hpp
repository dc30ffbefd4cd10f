#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

#include "lowps/lowrank_resolvent.hpp"
#include "lowps/types.hpp"

namespace lowps {

struct TruncatedSvd {
  CMatrix u_l;        // d x l, orthonormal columns
  RVector sigma_l;    // descending
  CMatrix v_l;        // d x l, orthonormal columns
  double tail_norm;   // sigma_{l+1}
};

// Exact l-term truncation of the SVD of a square matrix. Requires 1 <= l < d.
TruncatedSvd truncate_svd(const CMatrix& a, Index l);

enum class InflationMode { deterministic, estimated };

// {z : mu_{U,V}(z) <= inflation + eps} contains the eps-pseudospectrum of
// the matrix the factors approximate (with probability `confidence` for
// randomized sets).
struct LocalizationSet {
  LowRankFactors factors;
  GramCache grams;
  double inflation = 0.0;
  double confidence = 1.0;
  InflationMode mode = InflationMode::deterministic;

  // Randomized sets only.
  double sigma_next = 0.0;          // sigma^_{l+1} of Q*A
  double alpha = 0.0;               // rangefinder error term used in inflation
  double residual_estimate = 0.0;   // power-iteration estimate of ||(I - QQ*)A||
  std::optional<double> certified_inflation;  // ||A - UV*||, when A is materialised

  LocalizationSet(LowRankFactors f, double inflation, double confidence);
};

// Factors (U_l, V_l Sigma_l), inflation sigma_{l+1}, confidence 1.
LocalizationSet localization_from_truncation(const TruncatedSvd& ts);

// mu(z) <= inflation + eps.
bool contains(const LocalizationSet& set, Complex z, double eps);

// The same predicate through the l x l quadratic eigenproblem on
// (U_l, V_l Sigma_l).
bool membership_via_qep(const TruncatedSvd& ts, Complex z, double eps);

// Matrix-free access: block products with A and A*.
class LinearOperatorHandle {
 public:
  using Block = std::function<CMatrix(const CMatrix&)>;

  LinearOperatorHandle(Index rows, Index cols, Block apply, Block apply_adjoint,
                       Index block_size = 32);
  static LinearOperatorHandle from_dense(CMatrix a, Index block_size = 32);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index block_size() const { return block_size_; }

  // Applied `block_size` columns at a time.
  CMatrix apply(const CMatrix& w) const;
  CMatrix apply_adjoint(const CMatrix& y) const;

  // Present for handles built from a dense matrix.
  const CMatrix* dense() const { return dense_.get(); }

  // max |<A w, y> - <w, A* y>| / (||A w|| ||y|| + ||w|| ||A* y||) over
  // random probes.
  double adjoint_mismatch(std::uint64_t seed, int probes = 4) const;

 private:
  Index rows_;
  Index cols_;
  Block apply_;
  Block apply_adjoint_;
  Index block_size_;
  std::shared_ptr<const CMatrix> dense_;
};

struct RangeFinderResult {
  CMatrix q;                      // rows x k, orthonormal columns
  double residual_estimate = 0.0;  // stochastic: power iteration from a random start
  std::uint64_t seed_used = 0;
  bool retried = false;
};

// QR of A Omega for a complex Gaussian Omega with k columns. A sketch whose
// columns all vanish numerically is redrawn once with a fresh seed, then
// ConvergenceError("rank collapse ...").
RangeFinderResult gaussian_rangefinder(const LinearOperatorHandle& op, Index k, std::uint64_t seed,
                                       int power_iterations = 5);

// (1/delta)((1 + sqrt(l/(k-l-1))) s_{l+1} + e sqrt(k)/(k-l) sqrt(sum_{j>l} s_j^2))
// with sigmas_tail = (s_{l+1}, s_{l+2}, ...). Requires l < k - 1 and
// delta in (0, 1].
double gaussian_alpha(const RVector& sigmas_tail, Index l, Index k, double delta);

// (1 + 3 sqrt(d/k)) sigma_{l+1}. Requires 1 <= k <= d.
double srtt_alpha(double sigma_next, Index d, Index k);

// 1 - 1/l: an order statement for the failure probability O(1/l), not a
// certified bound.
double srtt_confidence(Index l);

// Rank-l localization from a Gaussian sketch with k columns. The inflation
// is sigma^_{l+1} + alpha, with alpha from gaussian_alpha on the sketch
// singular values followed by d - k copies of the residual estimate.
// Requires l < k - 1 and k < d.
LocalizationSet randomized_localization(const LinearOperatorHandle& op, Index l, Index k,
                                        double delta, std::uint64_t seed);

// eps + ||A - B||: Spec_eps(A) is inside Spec_{eps + ||A - B||}(B).
double perturbation_inclusion(double eps, double gap_norm);

// gap / (delta_a - gap), so that |kappa(A) - kappa(B)| <= kappa(A) * bound.
// Throws PreconditionError("bound inapplicable ...") unless gap < delta_a.
double kreiss_perturbation_bound(double kappa_a, double delta_a, double gap_norm);

}  // namespace lowps
