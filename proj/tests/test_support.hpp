#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "lowps/lowrank_resolvent.hpp"

namespace lowps::testing {

inline CMatrix complex_gaussian(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  CMatrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * Complex(n(rng), n(rng)) / std::sqrt(2.0);
  return m;
}

// Entries of unit variance scaled by 1/sqrt(d), so ||U V*|| is O(1).
inline LowRankFactors random_factors(Index d, Index r, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double s = 1.0 / std::pow(static_cast<double>(d), 0.25);
  CMatrix u = complex_gaussian(d, r, rng, s / std::sqrt(static_cast<double>(r)));
  CMatrix v = complex_gaussian(d, r, rng, s);
  return LowRankFactors(u, v);
}

// Random factors with V rescaled so that the spectral radius is `radius`.
inline LowRankFactors stable_factors(Index d, Index r, std::uint64_t seed, double radius) {
  LowRankFactors f = random_factors(d, r, seed);
  const double rho = GramCache::from_factors(f).core_eigenvalues().cwiseAbs().maxCoeff();
  return LowRankFactors(f.u(), f.v() * (radius / rho));
}

// A = Q diag(eigs) Q* with Q a random d x r orthonormal block.
inline LowRankFactors normal_factors(const CVector& eigs, Index d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Index r = eigs.size();
  Eigen::HouseholderQR<CMatrix> qr(complex_gaussian(d, r, rng));
  const CMatrix q = qr.householderQ() * CMatrix::Identity(d, r);
  return LowRankFactors(q * eigs.asDiagonal(), q);
}

// c e1 e1* in dimension d.
inline LowRankFactors rank_one(Index d, Complex c) {
  CMatrix u = CMatrix::Zero(d, 1), v = CMatrix::Zero(d, 1);
  u(0, 0) = c;
  v(0, 0) = 1.0;
  return LowRankFactors(u, v);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

}  // namespace lowps::testing
