// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion numbers as arguments to
// run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "koopman_oracle.hpp"
#include "lowps/approximation.hpp"
#include "lowps/boundary_solvers.hpp"
#include "lowps/cli.hpp"
#include "lowps/errors.hpp"
#include "lowps/linalg.hpp"
#include "lowps/lowrank_resolvent.hpp"
#include "lowps/oracle.hpp"
#include "lowps/transfer_operator.hpp"
#include "test_support.hpp"

using namespace lowps;
using lowps::testing::complex_gaussian;
using lowps::testing::rel_err;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

std::string sci(double x) { return fmt("%.3g", x); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CMatrix random_unitary(Index d, Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<CMatrix> qr(complex_gaussian(d, cols, rng));
  return qr.householderQ() * CMatrix::Identity(d, cols);
}

// Q1 diag(s) Q2* with s_j = top * decay^j for j < rank and zero beyond.
CMatrix decaying_matrix(Index d, Index rank, double top, double decay, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RVector s(rank);
  for (Index j = 0; j < rank; ++j) s(j) = top * std::pow(decay, static_cast<double>(j));
  return random_unitary(d, rank, rng) * s.cast<Complex>().asDiagonal() *
         random_unitary(d, rank, rng).adjoint();
}

double angle_distance(double a, double b) {
  const double t = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(t, kTwoPi - t);
}

// Largest distance from a point of `a` to the nearest point of `b`.
template <class Dist>
double one_sided(const std::vector<double>& a, const std::vector<double>& b, Dist dist) {
  double worst = 0.0;
  for (double x : a) {
    double best = 1e300;
    for (double y : b) best = std::min(best, dist(x, y));
    worst = std::max(worst, best);
  }
  return worst;
}

// P(X >= k) for X ~ Binomial(n, p).
double binomial_upper_tail(int n, int k, double p) {
  double tail = 0.0;
  for (int j = k; j <= n; ++j)
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0) +
                     j * std::log(p) + (n - j) * std::log1p(-p));
  return std::min(1.0, tail);
}

// ---------------------------------------------------------------------------
// 1 and 2 share the random suite: 200 instances cycling through
// d in {50, 100, 200} and r in {1, 5, 10}, with 50 points each.

struct SuiteInstance {
  LowRankFactors f;
  std::vector<Complex> z;
};

SuiteInstance suite_instance(int i) {
  static const Index dims[] = {50, 100, 200};
  static const Index ranks[] = {1, 5, 10};
  const Index d = dims[i % 3];
  const Index r = ranks[(i / 3) % 3];
  SuiteInstance s{lowps::testing::random_factors(d, r, 1000 + static_cast<std::uint64_t>(i)), {}};
  std::mt19937_64 rng(5000 + static_cast<std::uint64_t>(i));
  std::uniform_real_distribution<double> box(-2.0, 2.0);
  for (int k = 0; k < 50; ++k) s.z.emplace_back(box(rng), box(rng));
  return s;
}

Outcome criterion_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const SuiteInstance s = suite_instance(i);
    const GramCache g = GramCache::from_factors(s.f);
    const CMatrix a = s.f.dense();
    for (Complex z : s.z)
      worst = std::max(worst, std::abs(mu(g, z) - oracle::dense_sigma_min(a, z)) / (1.0 + std::abs(z)));
  }
  const double t = seconds_since(t0);
  const bool pass = worst <= 1e-8 && t <= 120.0;
  return {pass, "max |mu - sigma_min|/(1+|z|) = " + sci(worst) + " (tol 1e-8) over 10000 points, " +
                    fmt("%.1f", t) + " s (limit 120 s)"};
}

Outcome criterion_routes() {
  double worst_gep = 0.0, worst_qep = 0.0, worst_pair = 0.0;
  int over = 0;
  double min_ratio_over = 1e300;
  auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
  };
  for (int i = 0; i < 200; ++i) {
    const SuiteInstance s = suite_instance(i);
    const GramCache g = GramCache::from_factors(s.f);
    const GramCache go = GramCache::from_factors(orthonormalized(s.f));
    const double norm = g.operator_norm();
    for (Complex z : s.z) {
      const double m = mu(g, z), mg = mu_via_gep(g, z), mq = mu_via_qep(go, z);
      const double a = rel(m, mg), b = rel(m, mq), c = rel(mg, mq);
      worst_gep = std::max(worst_gep, a);
      worst_qep = std::max(worst_qep, b);
      worst_pair = std::max(worst_pair, c);
      if (std::max({a, b, c}) > 1e-8) {
        ++over;
        min_ratio_over = std::min(min_ratio_over, m / norm);
      }
    }
  }
  const double worst = std::max({worst_gep, worst_qep, worst_pair});
  std::string detail = "max relative difference mu/gep " + sci(worst_gep) + ", mu/qep " + sci(worst_qep) +
                       ", gep/qep " + sci(worst_pair) + " (tol 1e-8); " + std::to_string(over) +
                       " of 10000 points above tolerance";
  if (over > 0) detail += ", smallest mu/||A|| among them " + sci(min_ratio_over);
  return {worst <= 1e-8, detail};
}

// ---------------------------------------------------------------------------

Outcome criterion_derivatives() {
  const double h = 1e-5;
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int excluded = 0, evaluated = 0;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Index d = k % 2 == 0 ? 50 : 100;
    const Index r = 2 + 3 * (k % 3);
    const GramCache g =
        GramCache::from_factors(lowps::testing::random_factors(d, r, 3000 + static_cast<std::uint64_t>(k)));
    try {
      double exact = 0.0, fd = 0.0;
      if (k % 2 == 0) {
        const double rho = 0.3 + 1.7 * unit(rng), phi = kTwoPi * unit(rng);
        exact = dmu_dphi(g, rho, phi);
        fd = (mu(g, std::polar(rho, phi + h)) - mu(g, std::polar(rho, phi - h))) / (2 * h);
      } else {
        const double a = -1.5 + 3.0 * unit(rng), om = -1.5 + 3.0 * unit(rng);
        exact = dmu_domega(g, a, om);
        fd = (mu(g, Complex(a, om + h)) - mu(g, Complex(a, om - h))) / (2 * h);
      }
      worst = std::max(worst, rel_err(exact, fd));
      ++evaluated;
    } catch (const PreconditionError&) {
      ++excluded;
    }
  }
  const bool pass = worst <= 1e-5 && excluded < 5;
  return {pass, "max relative error vs central differences " + sci(worst) + " (tol 1e-5) at " +
                    std::to_string(evaluated) + " points, " + std::to_string(excluded) +
                    " excluded as non-simple (limit < 5)"};
}

// ---------------------------------------------------------------------------

Outcome criterion_intersections() {
  std::mt19937_64 rng(44);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_circle = 0.0, worst_line = 0.0;
  int count_mismatch = 0, unverified = 0, crossings = 0, empty_cases = 0;
  for (int k = 0; k < 50; ++k) {
    const Index d = 12 + 4 * (k % 5);
    const Index r = 1 + k % 4;
    const LowRankFactors f = lowps::testing::random_factors(d, r, 4000 + static_cast<std::uint64_t>(k));
    const GramCache g = GramCache::from_factors(f);
    const CMatrix a = f.dense();
    const double norm = g.operator_norm();

    // Circle at a random radius, eps midway between the extremes of mu on it.
    const double rho = (0.3 + 0.9 * unit(rng)) * std::max(norm, 0.2);
    double lo = 1e300, hi = 0.0;
    for (int j = 0; j < 720; ++j) {
      const double m = mu(g, std::polar(rho, kTwoPi * j / 720));
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    const double eps_c = lo + (0.2 + 0.6 * unit(rng)) * (hi - lo);
    const CircleIntersections c = circle_intersections(g, rho, eps_c);
    const std::vector<double> dc = oracle::dense_circle_crossings(a, rho, eps_c, 10000);
    if (c.angles.size() != dc.size()) ++count_mismatch;
    worst_circle = std::max({worst_circle, one_sided(dc, c.angles, angle_distance),
                             one_sided(c.angles, dc, angle_distance)});
    for (double phi : c.angles)
      if (std::abs(mu(g, std::polar(rho, phi)) - eps_c) > 1e-8 * std::max(1.0, eps_c)) ++unverified;
    crossings += static_cast<int>(c.angles.size());
    if (dc.empty()) ++empty_cases;

    // Vertical line through the spectral region.
    const double x = (-0.6 + 1.2 * unit(rng)) * std::max(norm, 0.2);
    const double range = norm + 2.0;
    lo = 1e300;
    hi = 0.0;
    for (int j = 0; j <= 720; ++j) {
      const double m = mu(g, Complex(x, -range + 2.0 * range * j / 720));
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    const double eps_l = lo + (0.2 + 0.6 * unit(rng)) * (hi - lo);
    const LineIntersections l = line_intersections(g, x, eps_l);
    const std::vector<double> dl = oracle::dense_line_crossings(a, x, eps_l, range, 10000);
    if (l.omegas.size() != dl.size()) ++count_mismatch;
    auto dist = [](double p, double q) { return std::abs(p - q); };
    worst_line = std::max({worst_line, one_sided(dl, l.omegas, dist), one_sided(l.omegas, dl, dist)});
    for (double w : l.omegas)
      if (std::abs(mu(g, Complex(x, w)) - eps_l) > 1e-8 * std::max(1.0, eps_l)) ++unverified;
    crossings += static_cast<int>(l.omegas.size());
    if (dl.empty()) ++empty_cases;
  }
  const bool pass = count_mismatch == 0 && worst_circle <= 1e-4 && worst_line <= 1e-4 &&
                    unverified == 0 && empty_cases == 0;
  return {pass, std::to_string(crossings) + " crossings on 50 circles and 50 lines; count mismatches " +
                    std::to_string(count_mismatch) + ", max coordinate gap circle " +
                    sci(worst_circle) + " line " + sci(worst_line) + " (tol 1e-4), unverified " +
                    std::to_string(unverified) + ", empty scans " + std::to_string(empty_cases)};
}

// ---------------------------------------------------------------------------

Outcome criterion_inclusion() {
  const Index d = 120;
  const GridSpec grid = GridSpec::square(1.6, 60);
  const std::vector<Index> ells{2, 5, 10, 20};
  const std::vector<double> levels{0.05, 0.1, 0.5};
  long violations = 0, sym_diff = 0, points = 0;
  int equality_checks = 0;
  for (int k = 0; k < 20; ++k) {
    // Sixteen full-rank matrices with decaying singular values, then one of
    // exact rank l for each l.
    const Index rank = k < 16 ? d : ells[static_cast<std::size_t>(k - 16)];
    const CMatrix a = decaying_matrix(d, rank, 1.2, 0.75, 6000 + static_cast<std::uint64_t>(k));
    const std::vector<double> dense = oracle::dense_sigma_grid(a, grid, 0);
    for (Index ell : ells) {
      const LocalizationSet set = localization_from_truncation(truncate_svd(a, ell));
      const std::vector<double> m = mu_grid(set.grams, grid, 0);
      for (double eps : levels) {
        for (std::size_t p = 0; p < grid.size(); ++p) {
          const bool in_a = dense[p] <= eps;
          const bool in_theta = m[p] <= eps + set.inflation;
          if (in_a && !in_theta) ++violations;
          if (rank == ell && in_a != in_theta) ++sym_diff;
          ++points;
        }
        if (rank == ell) ++equality_checks;
      }
    }
  }
  const bool pass = violations == 0 && sym_diff == 0;
  return {pass, std::to_string(violations) + " inclusion violations over " + std::to_string(points) +
                    " grid tests; " + std::to_string(sym_diff) + " symmetric-difference points over " +
                    std::to_string(equality_checks) + " exact-rank level sets"};
}

// ---------------------------------------------------------------------------

Outcome criterion_randomized() {
  const Index d = 120, ell = 5, k = 15;
  const double delta = 0.2, eps = 0.1;
  const GridSpec grid = GridSpec::square(1.6, 40);
  int failures = 0, trials = 0;
  double worst_ratio = 0.0;
  for (int j = 0; j < 5; ++j) {
    const CMatrix a = decaying_matrix(d, d, 1.2, 0.75, 7000 + static_cast<std::uint64_t>(j));
    const std::vector<double> dense = oracle::dense_sigma_grid(a, grid, 0);
    const LinearOperatorHandle op = LinearOperatorHandle::from_dense(a);
    for (int s = 0; s < 50; ++s) {
      const LocalizationSet set = randomized_localization(op, ell, k, delta, 100 + static_cast<std::uint64_t>(s));
      const std::vector<double> m = mu_grid(set.grams, grid, 0);
      bool failed = false;
      for (std::size_t p = 0; p < grid.size(); ++p)
        if (dense[p] <= eps && m[p] > eps + set.inflation) failed = true;
      if (set.certified_inflation)
        worst_ratio = std::max(worst_ratio, *set.certified_inflation / set.inflation);
      failures += failed ? 1 : 0;
      ++trials;
    }
  }
  const double rate = static_cast<double>(failures) / trials;
  const double p_value = binomial_upper_tail(trials, failures, delta);
  const bool pass = p_value >= 0.05;
  return {pass, std::to_string(failures) + "/" + std::to_string(trials) + " failed inclusions (rate " +
                    sci(rate) + ", binomial p-value against rate 0.2: " + sci(p_value) +
                    ", reject below 0.05); max ||A - UV*|| / inflation " + sci(worst_ratio)};
}

// ---------------------------------------------------------------------------

Outcome criterion_margins() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_d2i = 0.0, worst_kreiss = 0.0, min_kappa = 1e300, worst_normal = 0.0;
  double general_min = 1e300, general_max = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index d = 20 + 10 * (k % 4);
    const Index r = 2 + k % 4;
    const double radius = 0.5 + 0.45 * unit(rng);
    const LowRankFactors f = lowps::testing::stable_factors(d, r, 8000 + static_cast<std::uint64_t>(k), radius);
    const CMatrix a = f.dense();
    const StabilityReport d2i = distance_to_instability(f);
    worst_d2i = std::max(worst_d2i, rel_err(d2i.value, oracle::dense_distance_to_instability(a, 4096).value));
    const StabilityReport kr = kreiss_discrete(f);
    worst_kreiss = std::max(worst_kreiss, rel_err(kr.value, oracle::dense_kreiss(a, 60, 180).value));
    min_kappa = std::min(min_kappa, kr.value);
    general_min = std::min(general_min, kr.value);
    general_max = std::max(general_max, kr.value);
  }
  for (int k = 0; k < 10; ++k) {
    const Index r = 1 + k % 5;
    CVector eig(r);
    for (Index i = 0; i < r; ++i) eig(i) = std::polar(0.95 * std::sqrt(unit(rng)), kTwoPi * unit(rng));
    const StabilityReport kr =
        kreiss_discrete(lowps::testing::normal_factors(eig, 30, 8100 + static_cast<std::uint64_t>(k)));
    worst_normal = std::max(worst_normal, std::abs(kr.value - 1.0));
    min_kappa = std::min(min_kappa, kr.value);
  }
  const bool pass = worst_d2i <= 1e-6 && worst_kreiss <= 1e-3 && min_kappa >= 1.0 && worst_normal <= 1e-2;
  return {pass, "20 instances: max rel err distance to instability " + sci(worst_d2i) +
                    " (tol 1e-6), Kreiss " + sci(worst_kreiss) + " (tol 1e-3), kappa range [" +
                    fmt("%.3f", general_min) + ", " + fmt("%.3f", general_max) + "]; min kappa overall " +
                    fmt("%.6f", min_kappa) + "; 10 normal instances max |kappa - 1| " +
                    sci(worst_normal) + " (tol 1e-2)"};
}

// ---------------------------------------------------------------------------

Outcome criterion_kreiss_perturbation() {
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int violations = 0;
  double worst_fraction = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Index d = 30 + 5 * (k % 4);
    const Index r = 2 + k % 3;
    const LowRankFactors a = lowps::testing::stable_factors(d, r, 9000 + static_cast<std::uint64_t>(k), 0.6 + 0.3 * unit(rng));
    const double delta_a = distance_to_instability(a).value;
    const double gap = (0.1 + 0.7 * unit(rng)) * delta_a;

    // B = A + gap x y* with unit x, y.
    std::mt19937_64 vr(9100 + static_cast<std::uint64_t>(k));
    CVector x = complex_gaussian(d, 1, vr), y = complex_gaussian(d, 1, vr);
    x.normalize();
    y.normalize();
    CMatrix ub(d, r + 1), vb(d, r + 1);
    ub << a.u(), gap * x;
    vb << a.v(), y;
    const LowRankFactors b(ub, vb);

    const double ka = kreiss_discrete(a).value;
    const double kb = kreiss_discrete(b).value;
    const double bound = kreiss_perturbation_bound(ka, delta_a, gap);
    const double measured = std::abs(ka - kb) / ka;
    if (measured > bound) ++violations;
    worst_fraction = std::max(worst_fraction, measured / bound);
  }
  return {violations == 0, std::to_string(violations) + " violations in 20 pairs; largest measured/bound " +
                               sci(worst_fraction)};
}

// ---------------------------------------------------------------------------

Outcome criterion_koopman_oracle() {
  struct Case {
    const char* name;
    Trajectory traj;
  };
  RMatrix normal(2, 2), skew(2, 2);
  normal << -0.7, 0.3, 0.3, -0.7;
  skew << -0.7, 100.0, -0.1, -0.7;
  std::vector<Case> cases{{"OU normal", simulate_ou(50, normal, 1.0, 0.5, 6)},
                          {"OU nonnormal", simulate_ou(50, skew, 1.0, 0.1, 7)},
                          {"logistic", simulate_logistic(50, 4, 8)}};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> box(-1.2, 1.2);
  double worst_h = 0.0, worst_l2 = 0.0;
  std::string factors;
  for (const Case& c : cases) {
    // The reduced L2 blocks equal the L2 operator when the range of the
    // centered Gram contains E V_r. Halve the bandwidth from the median
    // until the Gram has full rank n - 1 on the centered subspace.
    const Index n = c.traj.size();
    double factor = 1.0;
    std::shared_ptr<const RMatrix> gram;
    for (;; factor *= 0.5) {
      gram = std::make_shared<const RMatrix>(gram_centered(c.traj, KernelConfig{factor * median_bandwidth(c.traj)}, 1));
      const RVector lam = Eigen::SelfAdjointEigenSolver<RMatrix>(*gram, Eigen::EigenvaluesOnly).eigenvalues();
      if ((lam.array() > 1e-12 * lam.maxCoeff()).count() == n - 1 || factor < 1e-3) break;
    }
    factors += std::string(factors.empty() ? "" : ", ") + c.name + " " + fmt("%g", factor);
    const RrrModel m = fit_rrr(gram, 1e-3, 6);
    const lowps::testing::DenseKoopman dense = lowps::testing::dense_koopman(m);
    for (int k = 0; k < 100; ++k) {
      const Complex z(box(rng), box(rng));
      worst_h = std::max(worst_h, rel_err(mu_h(m, z), lowps::testing::dense_mu(dense.x_h, z)));
      worst_l2 = std::max(worst_l2, rel_err(mu_l2(m, z), lowps::testing::dense_mu(dense.x_l2, z)));
    }
  }
  return {worst_h <= 1e-8 && worst_l2 <= 1e-8,
          "n = 50, 3 trajectories x 100 points: max relative error mu_h " + sci(worst_h) + ", mu_l2 " +
              sci(worst_l2) + " (tol 1e-8); bandwidth / median: " + factors};
}

// ---------------------------------------------------------------------------

struct OuResult {
  double kappa_l2 = 0.0;
  double kappa_h = 0.0;
  double disk_gap = 0.0;   // sup over the grid of |mu_l2 - distance to the eigenvalues and 0|
  double hausdorff = 0.0;  // worst grid Hausdorff distance between level sets and eps-disks
  double hausdorff_eps = 0.0;
};

// Hausdorff distance between two finite point sets; infinite if exactly one is empty.
double hausdorff_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  const auto directed = [](const std::vector<Complex>& x, const std::vector<Complex>& y) {
    double h = 0.0;
    for (const Complex& p : x) {
      double m = std::numeric_limits<double>::infinity();
      for (const Complex& q : y) m = std::min(m, std::abs(p - q));
      h = std::max(h, m);
    }
    return h;
  };
  return std::max(directed(a, b), directed(b, a));
}

OuResult ou_experiment(const RMatrix& drift, bool with_disk_check) {
  const Trajectory t = simulate_ou(10000, drift, 1.0, 0.1, 7);
  const KernelConfig kernel{median_bandwidth(t)};
  const RrrModel m = fit_rrr(std::make_shared<const RMatrix>(gram_centered(t, kernel, 0)), 1e-6, 20);
  std::vector<double> eps;
  for (int i = 0; i <= 16; ++i) eps.push_back(std::pow(10.0, -3.0 + 0.25 * i));
  OuResult out;
  out.kappa_l2 = koop_kreiss(m, Geometry::l2, eps).kappa;
  out.kappa_h = koop_kreiss(m, Geometry::rkhs, eps).kappa;
  if (with_disk_check) {
    const GridSpec grid = GridSpec::square(1.2, 41);
    const KoopGrid kg = koop_pseudospectrum_grid(m, grid, 0);
    const CVector ev = m.eigenvalues();
    std::vector<double> dist(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
      const Complex z = grid.point(p);
      dist[p] = std::abs(z);
      for (Index i = 0; i < ev.size(); ++i) dist[p] = std::min(dist[p], std::abs(z - ev(i)));
      out.disk_gap = std::max(out.disk_gap, std::abs(kg.mu_l2[p] - dist[p]));
    }
    // Level sets thinner than the grid step are not resolved and are skipped.
    const double step = 2.4 / 40.0;
    for (double e : eps) {
      if (e < step) continue;
      std::vector<Complex> level, disks;
      for (std::size_t p = 0; p < grid.size(); ++p) {
        if (kg.mu_l2[p] <= e) level.push_back(grid.point(p));
        if (dist[p] <= e) disks.push_back(grid.point(p));
      }
      const double h = hausdorff_distance(level, disks);
      if (h > out.hausdorff) {
        out.hausdorff = h;
        out.hausdorff_eps = e;
      }
    }
  }
  return out;
}

Outcome criterion_experiments() {
  const auto t0 = std::chrono::steady_clock::now();
  RMatrix normal(2, 2), skew(2, 2);
  normal << -0.7, 0.3, 0.3, -0.7;
  skew << -0.7, 100.0, -0.1, -0.7;
  const OuResult n = ou_experiment(normal, true);
  const OuResult s = ou_experiment(skew, false);
  const bool pass_a = n.kappa_l2 <= 1.5 && n.hausdorff <= 0.1;
  const double ratio = s.kappa_l2 / n.kappa_l2;
  const bool pass_b = ratio > 5.0;

  // (c) through the command-line pipeline, then checked against a refit.
  bool pass_c = false;
  std::string c_detail;
  const auto dir = std::filesystem::temp_directory_path() / "lowps_acceptance_logistic";
  std::filesystem::remove_all(dir);
  std::ostringstream out, err;
  const int code = cli::run({"koopman", "--simulate", "logistic", "--n", "2000", "--noise-exponent", "4",
                             "--seed", "12", "--rank", "10", "--gamma", "1e-6", "--n-re", "41", "--n-im",
                             "41", "--re-min", "-1.2", "--re-max", "1.2", "--im-min", "-1.2", "--im-max",
                             "1.2", "--kreiss-eps", "0.01", "0.1", "1", "--out-dir", dir.string()},
                            out, err);
  if (code != 0) {
    c_detail = "pipeline exit " + std::to_string(code) + ": " + err.str();
  } else {
    std::ifstream mf(dir / "model.json");
    const nlohmann::json model = nlohmann::json::parse(mf);
    const Trajectory t = simulate_logistic(2000, 4, 12);
    const KernelConfig kernel{median_bandwidth(t)};
    const RrrModel m = fit_rrr(std::make_shared<const RMatrix>(gram_centered(t, kernel, 0)), 1e-6, 10);
    const CVector ev = m.eigenvalues();
    double eig_gap = 0.0, worst_mu = 0.0;
    for (Index i = 0; i < ev.size(); ++i) {
      const Complex ej(model["eigenvalues"][i][0].get<double>(), model["eigenvalues"][i][1].get<double>());
      eig_gap = std::max(eig_gap, std::abs(ej - ev(i)));
      worst_mu = std::max({worst_mu, mu_h(m, ev(i)), mu_l2(m, ev(i))});
    }
    const bool files = std::filesystem::exists(dir / "koop_grid.csv") && std::filesystem::exists(dir / "kreiss.csv");
    pass_c = files && ev.size() == 10 && eig_gap <= 1e-10 && worst_mu <= 1e-3;
    c_detail = "pipeline exit 0, max mu at the " + std::to_string(ev.size()) +
               " learned eigenvalues " + sci(worst_mu) + " (smallest level 1e-3), refit gap " + sci(eig_gap);
  }
  std::filesystem::remove_all(dir);

  const double t = seconds_since(t0);
  const bool pass = pass_a && pass_b && pass_c && t <= 600.0;
  return {pass, std::string("(a) ") + (pass_a ? "pass" : "FAIL") + ": kappa_L2 " + fmt("%.4f", n.kappa_l2) +
                    " (limit 1.5), level-set vs eps-disk Hausdorff distance " + fmt("%.3f", n.hausdorff) +
                    " at eps " + fmt("%.3g", n.hausdorff_eps) + " (limit 0.1, grid step 0.06), sup |mu_L2 - disk distance| " +
                    sci(n.disk_gap) + "; (b) " +
                    (pass_b ? "pass" : "FAIL") + ": kappa_L2 nonnormal/normal " + fmt("%.4f", ratio) +
                    " (need > 5; RKHS geometry gives " + fmt("%.3f", s.kappa_h) + "/" + fmt("%.3f", n.kappa_h) +
                    " = " + fmt("%.2f", s.kappa_h / n.kappa_h) + "); (c) " + (pass_c ? "pass" : "FAIL") + ": " +
                    c_detail + "; " + fmt("%.0f", t) + " s (limit 600 s)"};
}

// ---------------------------------------------------------------------------

Outcome criterion_speedup() {
  const auto dir = std::filesystem::temp_directory_path() / "lowps_acceptance_bench";
  std::filesystem::remove_all(dir);
  std::ostringstream out, err;
  const int code = cli::run({"bench", "--dims", "200", "500", "1000", "--ranks", "10", "--grid-m", "2500",
                             "--dense-sample", "25", "--seed", "1", "--out-dir", dir.string()},
                            out, err);
  if (code != 0) return {false, "bench exit " + std::to_string(code) + ": " + err.str()};
  std::ifstream in(dir / "bench.csv");
  std::string line;
  std::getline(in, line);
  std::vector<double> dims, speedups, logs;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    dims.push_back(std::stod(f[0]));
    speedups.push_back(std::stod(f[9]));
    logs.push_back(std::stod(f[10]));
  }
  std::filesystem::remove_all(dir);
  if (speedups.size() != 3) return {false, "bench produced " + std::to_string(speedups.size()) + " rows"};
  const bool monotone = logs[0] < logs[1] && logs[1] < logs[2];
  const bool pass = speedups[2] >= 20.0 && monotone;
  return {pass, "speedup d=200 " + fmt("%.1f", speedups[0]) + "x, d=500 " + fmt("%.1f", speedups[1]) +
                    "x, d=1000 " + fmt("%.1f", speedups[2]) + "x (need >= 20x at d=1000), log-speedup " +
                    (monotone ? "increasing" : "NOT increasing") +
                    "; dense time extrapolated from 25 evenly spaced points"};
}

// ---------------------------------------------------------------------------

Outcome criterion_transient() {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_norm = 0.0;
  int violations = 0;
  double min_lower = 1e300, min_upper = 1e300;
  for (int k = 0; k < 20; ++k) {
    const Index d = 20 + 13 * (k % 10);  // 20 .. 137
    const Index r = 1 + k % 6;
    const LowRankFactors f =
        lowps::testing::stable_factors(d, r, 12000 + static_cast<std::uint64_t>(k), 0.5 + 0.45 * unit(rng));
    const std::vector<double> low = power_norms(f, 20);
    const std::vector<double> dense = oracle::dense_power_norms(f.dense(), 20);
    for (int t = 0; t < 20; ++t) worst_norm = std::max(worst_norm, rel_err(low[t], dense[t]));
    const double kappa = kreiss_discrete(f).value;
    const double p = transient_constants(f).p;
    const double upper = std::numbers::e * static_cast<double>(d) * kappa;
    if (!(kappa <= p * (1 + 1e-9)) || !(p <= upper)) ++violations;
    min_lower = std::min(min_lower, p / kappa);
    min_upper = std::min(min_upper, upper / p);
  }
  const bool pass = worst_norm <= 1e-10 && violations == 0;
  return {pass, "max relative error of ||A^t|| (t <= 20) " + sci(worst_norm) + " (tol 1e-10); " +
                    std::to_string(violations) + " violations of kappa <= p <= e d kappa (min p/kappa " +
                    fmt("%.4f", min_lower) + ", min e d kappa/p " + sci(min_upper) + ")"};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "exactness of mu against dense sigma_min", criterion_exactness},
      {2, "agreement of the three mu routes", criterion_routes},
      {3, "derivatives against central differences", criterion_derivatives},
      {4, "circle and line intersections against dense scans", criterion_intersections},
      {5, "deterministic localization inclusion", criterion_inclusion},
      {6, "randomized localization inclusion", criterion_randomized},
      {7, "distance to instability and Kreiss constant against dense oracles", criterion_margins},
      {8, "Kreiss perturbation bound", criterion_kreiss_perturbation},
      {9, "Koopman pseudospectra against dense n = 50 constructions", criterion_koopman_oracle},
      {10, "Ornstein-Uhlenbeck and logistic map experiments", criterion_experiments},
      {11, "speedup over dense grid evaluation", criterion_speedup},
      {12, "power norms and transient constants", criterion_transient},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o{false, ""};
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << c.id << "] " << c.name << ": " << o.detail << " ("
              << fmt("%.1f", seconds_since(t0)) << " s)" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
