#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "subdiff/msd.hpp"
#include "subdiff/special.hpp"

using namespace subdiff;

TEST_CASE("stable potential closed forms") {
  auto m = BernsteinModel::stable(0.5);
  Potential pot(m, 100.0);
  CHECK(pot.density(1.0) == doctest::Approx(0.5641895835477563).epsilon(1e-12));
  CHECK(pot.density(4.0) == doctest::Approx(0.28209479177387814).epsilon(1e-12));
  CHECK(pot.value(1.0) == doctest::Approx(1.1283791670955126).epsilon(1e-12));
  CHECK(pot.value(4.0) == doctest::Approx(2.2567583341910252).epsilon(1e-12));
  CHECK(pot.value(0.0) == 0.0);
  CHECK(potential(m, 1.0) == doctest::Approx(1.1283791670955126).epsilon(1e-12));
  CHECK(potential_density(m, 1.0) == doctest::Approx(0.5641895835477563).epsilon(1e-12));
}

TEST_CASE("relativistic potential against the exact density") {
  // u(t) = 1 + erf(sqrt(t)) + e^{-t}/sqrt(pi t) for beta = 1/2, m = 1
  auto model = BernsteinModel::relativistic(0.5, 1.0);
  Potential pot(model, 60.0);
  auto exact_u = [](double t) {
    return 1.0 + std::erf(std::sqrt(t)) + std::exp(-t) / std::sqrt(M_PI * t);
  };
  CHECK(exact_u(1.0) == doctest::Approx(2.050254541660012).epsilon(1e-12));
  for (double t : {0.25, 1.0, 5.0, 20.0}) {
    CHECK(pot.density(t) == doctest::Approx(exact_u(t)).epsilon(2e-3));
  }
  // long-time slope of U approaches 1/phi'(0) = 2
  double slope = (pot.value(50.0) - pot.value(40.0)) / 10.0;
  CHECK(slope == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("potential Laplace oracle") {
  auto st = BernsteinModel::stable(0.5);
  Potential pot(st, 400.0);
  for (double lambda : {0.5, 1.0, 2.0}) {
    LaplacePair p = laplace_oracle_potential(pot, lambda, 400.0);
    CHECK(p.analytic == doctest::Approx(1.0 / std::sqrt(lambda)).epsilon(1e-12));
    CHECK(p.numeric == doctest::Approx(p.analytic).epsilon(1e-3));
  }

  auto rel = BernsteinModel::relativistic(0.5, 1.0);
  LaplacePair p = laplace_oracle_potential(rel, 1.0, 80.0);
  CHECK(p.analytic == doctest::Approx(2.414213562373095).epsilon(1e-12));
  CHECK(p.numeric == doctest::Approx(p.analytic).epsilon(1e-3));
}

TEST_CASE("renewal identity") {
  auto st = BernsteinModel::stable(0.5);
  Potential ps(st, 20.0);
  CHECK(potential_renewal_check(ps, 0.5) == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(potential_renewal_check(ps, 5.0) == doctest::Approx(1.0).epsilon(2e-3));

  auto rel = BernsteinModel::relativistic(0.5, 1.0);
  Potential pr(rel, 20.0);
  CHECK(potential_renewal_check(pr, 0.5) == doctest::Approx(1.0).epsilon(2e-3));
  CHECK(potential_renewal_check(pr, 5.0) == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("long-time band constants") {
  auto b5 = asymptotic_bounds(0.5);
  CHECK(b5.first == doctest::Approx(0.37612638903183754).epsilon(1e-12));
  CHECK(b5.second == doctest::Approx(1.1283791670955126).epsilon(1e-12));
  auto b1 = asymptotic_bounds(1.0);
  CHECK(b1.first == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(b1.second == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(b5.first < b5.second);
  CHECK_THROWS_AS(asymptotic_bounds(0.0), std::invalid_argument);
  CHECK_THROWS_AS(asymptotic_bounds(1.5), std::invalid_argument);
}

TEST_CASE("scaling of the m^beta factor in the band") {
  // stable: Phi(1/t) U(t) = 1/Gamma(1+beta) exactly, inside the band
  auto m = BernsteinModel::stable(0.5);
  auto [lo, hi] = asymptotic_bounds(0.5);
  for (double t : {10.0, 100.0, 1000.0}) {
    double ratio = m.phi(1.0 / t) * potential(m, t);
    CHECK(ratio == doctest::Approx(hi).epsilon(1e-10));
    CHECK(ratio >= lo);
  }

  // relativistic: Phi(1/t) U(t) -> 1/Gamma(2) = 1 from below
  auto rel = BernsteinModel::relativistic(0.5, 1.0);
  Potential pot(rel, 1000.0);
  double ratio = rel.phi(1.0 / 1000.0) * pot.value(1000.0);
  CHECK(ratio == doctest::Approx(1.0).epsilon(0.02));
  CHECK(ratio < 1.0 + 1e-9);
}

TEST_CASE("killed second-moment formula") {
  auto m = BernsteinModel::stable(0.5);
  auto boundary = Boundary::constant(2.0);
  McConfig cfg;
  cfg.n_paths = 20000;
  cfg.mesh = 2e-3;
  cfg.seed = 11;
  auto grid = linear_grid(0.0, 4.0, 513);
  CrossingLaw law = first_crossing(m, boundary, 0.0, grid, cfg);
  Potential pot(m, 10.0);

  double t = 4.0;
  double formula = msd_formula(pot, boundary, law, t);
  CHECK(formula > 0.0);
  CHECK(formula < pot.value(t));  // killing can only reduce the second moment

  // observable agreement with the direct killed-path estimate
  MsdEstimate est = msd_estimate(m, &boundary, 0.0, {t}, cfg);
  CHECK(std::fabs(formula - est.msd[0]) < 3.0 * est.se[0] + 0.01);

  // single-shot convenience overload
  CHECK(msd_formula(m, boundary, law, t) == doctest::Approx(formula).epsilon(1e-9));
}

TEST_CASE("free-case scaling verdict, stable") {
  auto m = BernsteinModel::stable(0.5);
  McConfig cfg;
  cfg.n_paths = 10000;
  cfg.mesh = 0.02;
  cfg.seed = 29;
  auto t_grid = log_grid(10.0, 100.0, 9);
  MsdEstimate est = msd_estimate(m, nullptr, 0.0, t_grid, cfg);
  ScalingReport rep = scaling_verdict(m, nullptr, est);
  CHECK(rep.conclusive);
  CHECK(rep.band_pass);
  CHECK(rep.gamma == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(rep.slope == doctest::Approx(0.5).epsilon(0.1));
  CHECK(rep.lower == doctest::Approx(0.37612638903183754).epsilon(1e-12));
  CHECK(!rep.summary.empty());

  // window too short for a decade: inconclusive, never a hard failure
  MsdEstimate shallow = msd_estimate(m, nullptr, 0.0, log_grid(10.0, 20.0, 4), cfg);
  ScalingReport rs = scaling_verdict(m, nullptr, shallow);
  CHECK_FALSE(rs.conclusive);
}

TEST_CASE("free-case scaling verdict, relativistic") {
  auto m = BernsteinModel::relativistic(0.5, 1.0);
  McConfig cfg;
  cfg.n_paths = 8000;
  cfg.mesh = 0.05;
  cfg.seed = 31;
  auto t_grid = log_grid(5.0, 50.0, 9);
  MsdEstimate est = msd_estimate(m, nullptr, 0.0, t_grid, cfg);
  ScalingReport rep = scaling_verdict(m, nullptr, est);
  CHECK(rep.conclusive);
  CHECK(rep.band_pass);
  CHECK(rep.gamma == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.slope == doctest::Approx(1.0).epsilon(0.1));

  // diffusive long-time limit: msd ~ t / phi'(0) = 2t
  std::size_t last = est.t.size() - 1;
  CHECK(est.msd[last] / est.t[last] == doctest::Approx(2.0).epsilon(0.1));
}
