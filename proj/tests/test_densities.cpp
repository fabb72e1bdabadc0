#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "subdiff/densities.hpp"
#include "subdiff/special.hpp"

using namespace subdiff;

namespace {

// beta = 1/2 closed form: f_L(s; t) = e^{-s^2/(4t)} / sqrt(pi t)
double half_f(double s, double t) { return std::exp(-s * s / (4.0 * t)) / std::sqrt(M_PI * t); }
double half_ds(double s, double t) { return -s / (2.0 * t) * half_f(s, t); }
double half_dt(double s, double t) {
  return (s * s / (4.0 * t * t) - 0.5 / t) * half_f(s, t);
}

}  // namespace

TEST_CASE("inverse density closed form at beta = 1/2, spot values") {
  CHECK(inverse_density_stable(0.5, 1.0, 1.0) ==
        doctest::Approx(0.43939128946772243).epsilon(1e-9));
  CHECK(inverse_density_stable_ds(0.5, 1.0, 1.0) ==
        doctest::Approx(-0.21969564473386122).epsilon(1e-8));
  CHECK(inverse_density_stable_dt(0.5, 1.0, 1.0) ==
        doctest::Approx(-0.10984782236693061).epsilon(1e-8));
}

TEST_CASE("inverse density closed form at beta = 1/2, grid") {
  auto s_grid = linear_grid(0.1, 3.0, 20);
  auto t_grid = linear_grid(0.2, 2.5, 20);
  double worst_f = 0.0, worst_ds = 0.0, worst_dt = 0.0;
  for (double s : s_grid) {
    for (double t : t_grid) {
      double f = inverse_density_stable(0.5, s, t);
      double ds = inverse_density_stable_ds(0.5, s, t);
      double dt = inverse_density_stable_dt(0.5, s, t);
      worst_f = std::max(worst_f, std::fabs(f - half_f(s, t)) / half_f(s, t));
      // derivative errors relative to the row scale (they cross zero)
      double scale = half_f(s, t) / std::sqrt(t);
      worst_ds = std::max(worst_ds, std::fabs(ds - half_ds(s, t)) / std::max(scale, 1e-8));
      worst_dt = std::max(worst_dt, std::fabs(dt - half_dt(s, t)) / std::max(scale, 1e-8));
    }
  }
  CHECK(worst_f < 1e-4);
  CHECK(worst_ds < 1e-3);
  CHECK(worst_dt < 1e-3);
}

TEST_CASE("unit-time stable series matches the scaled inverse density") {
  // f_L(s; t) = t s^{-1-1/beta} g1(t s^{-1/beta}) / beta with g1 the unit density
  double beta = 0.5, s = 1.0, t = 1.0;
  double x = t * std::pow(s, -1.0 / beta);
  SeriesEval g1 = stable_unit_density(beta, x);
  double via_unit = t / beta * std::pow(s, -1.0 - 1.0 / beta) * g1.value;
  CHECK(via_unit == doctest::Approx(half_f(s, t)).epsilon(1e-8));
  CHECK(g1.abs_error_estimate < 1e-10 * std::max(g1.value, 1.0));

  // beta = 1/2 unit density has its own closed form e^{-1/(4x)}/(2 sqrt(pi) x^{3/2})
  double closed = std::exp(-0.25 / x) / (2.0 * std::sqrt(M_PI) * std::pow(x, 1.5));
  CHECK(g1.value == doctest::Approx(closed).epsilon(1e-9));
}

TEST_CASE("small-s limits of the inverse density") {
  // value limit: f_L(0+, t) = levy_tail(t)
  for (double beta : {0.3, 0.5, 0.7}) {
    auto m = BernsteinModel::stable(beta);
    for (double t : {0.7, 1.0, 2.0}) {
      double f0 = inverse_density_stable(beta, 1e-7, t);
      CHECK(f0 == doctest::Approx(m.levy_tail(t)).epsilon(1e-4));
    }
  }

  // slope limit: d/ds f_L(0+, t) = -t^{-2 beta} / Gamma(1 - 2 beta)
  CHECK(inverse_density_stable_ds(0.3, 1e-6, 1.0) ==
        doctest::Approx(-0.45082419919441113).epsilon(2e-4));
  CHECK(inverse_density_stable_ds(0.7, 1e-6, 1.0) ==
        doctest::Approx(0.2686019889768294).epsilon(2e-4));
  // at beta = 1/2 the reciprocal gamma factor vanishes
  CHECK(std::fabs(inverse_density_stable_ds(0.5, 1e-6, 1.0)) < 1e-4);

  // scaling in t of the slope constant, beta = 0.3: t^{-0.6}
  double r = inverse_density_stable_ds(0.3, 1e-6, 2.0) / inverse_density_stable_ds(0.3, 1e-6, 1.0);
  CHECK(r == doctest::Approx(std::pow(2.0, -0.6)).epsilon(1e-3));
}

TEST_CASE("relativistic series window") {
  double beta = 0.5, m = 1.0;
  // value at the s -> 0 limit agrees with the tilted tail
  auto model = BernsteinModel::relativistic(beta, m);
  CHECK(relativistic_inverse_density(beta, m, 1e-7, 1.0) ==
        doctest::Approx(model.levy_tail(1.0)).epsilon(1e-4));
  // refuses far outside the window instead of returning noise
  CHECK_THROWS(relativistic_inverse_density(beta, m, 2000.0, 1.0));
}

TEST_CASE("Fourier route agrees with the series routes") {
  // stable, beta = 0.7: series and oscillatory-integral evaluations are
  // fully independent implementations
  auto m7 = BernsteinModel::stable(0.7);
  FourierEngine eng7(m7);
  for (double s : {0.25, 0.5, 1.0}) {
    for (double t : {0.5, 1.0, 2.0}) {
      double series = inverse_density_stable(0.7, s, t);
      double fourier = eng7.inverse_density(s, t);
      CHECK(fourier == doctest::Approx(series).epsilon(2e-4));
    }
  }

  // relativistic inside the series window
  auto mr = BernsteinModel::relativistic(0.5, 1.0);
  FourierEngine engr(mr);
  for (double s : {0.5, 1.0, 2.0}) {
    double series = relativistic_inverse_density(0.5, 1.0, s, 1.0);
    CHECK(engr.inverse_density(s, 1.0) == doctest::Approx(series).epsilon(2e-4));
  }

  // derivatives at one interior point, against closed forms at beta = 1/2
  auto mh = BernsteinModel::stable(0.5);
  FourierEngine engh(mh);
  double out[3];
  engh.inverse_all(1.0, 1.0, out);
  CHECK(out[0] == doctest::Approx(half_f(1.0, 1.0)).epsilon(5e-4));
  CHECK(out[1] == doctest::Approx(half_dt(1.0, 1.0)).epsilon(5e-3));
  CHECK(out[2] == doctest::Approx(half_ds(1.0, 1.0)).epsilon(5e-3));
}

TEST_CASE("routed evaluation picks a working provider for every model") {
  auto st = BernsteinModel::stable(0.5);
  CHECK(inverse_density(st, 1.0, 1.0) == doctest::Approx(half_f(1.0, 1.0)).epsilon(1e-6));
  CHECK(inverse_density_ds(st, 1.0, 1.0) == doctest::Approx(half_ds(1.0, 1.0)).epsilon(1e-5));
  CHECK(inverse_density_dt(st, 1.0, 1.0) == doctest::Approx(half_dt(1.0, 1.0)).epsilon(1e-5));

  auto rel = BernsteinModel::relativistic(0.5, 1.0);
  CHECK(inverse_density(rel, 1.0, 1.0) > 0.0);
}

TEST_CASE("subordinator density normalizes and Laplace-transforms correctly") {
  auto m = BernsteinModel::stable(0.5);
  FourierEngine eng(m);
  // g(.; s) is a probability density in t: trapezoid over the cached row
  double s = 0.5;
  auto row = eng.row(s, 200.0);
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < row->t.size(); ++i) {
    mass += 0.5 * (row->g[i] + row->g[i + 1]) * (row->t[i + 1] - row->t[i]);
  }
  // the window [0, 200] misses the heavy t^{-1/2} tail; at beta = 1/2 the
  // captured mass is exactly erfc(s / (2 sqrt(t_max)))
  CHECK(mass == doctest::Approx(std::erfc(s / (2.0 * std::sqrt(200.0)))).epsilon(5e-3));

  // beta = 1/2 subordinator density closed form (Levy):
  // g(t; s) = s e^{-s^2/(4t)} / (2 sqrt(pi) t^{3/2})
  double g = eng.g(1.0, 1.0);
  double closed = std::exp(-0.25) / (2.0 * std::sqrt(M_PI));
  CHECK(g == doctest::Approx(closed).epsilon(1e-4));
  CHECK(subordinator_density(m, 1.0, 1.0) == doctest::Approx(closed).epsilon(1e-4));
}

TEST_CASE("Laplace oracle for the inverse density") {
  auto m = BernsteinModel::stable(0.5);
  FourierEngine eng(m);
  for (double s : {0.25, 1.0}) {
    for (double lambda : {0.5, 2.0}) {
      LaplacePair p = laplace_oracle_fL(eng, s, lambda, 40.0 / lambda);
      CHECK(p.numeric == doctest::Approx(p.analytic).epsilon(1e-3));
      // analytic side really is (phi/lambda) e^{-s phi}
      double phi = m.phi(lambda);
      CHECK(p.analytic == doctest::Approx(phi / lambda * std::exp(-s * phi)).epsilon(1e-12));
    }
  }
}

TEST_CASE("governing identity for the inverse density") {
  auto m = BernsteinModel::stable(0.5);
  FourierEngine eng(m);
  double r128 = governing_residual_fL(eng, 1.0, 2.0, 128);
  CHECK(r128 < 1e-2);
  double r64 = governing_residual_fL(eng, 1.0, 2.0, 64);
  CHECK(r64 / r128 > 1.5);
}

TEST_CASE("density table construction and validation") {
  auto m = BernsteinModel::stable(0.5);
  // the default grid covers the s-mass for every t in range; the trapezoid
  // normalization audit inside validate() needs production resolution
  // (~200 nodes) to sit inside its [0.99, 1.001] band
  auto s_grid = default_s_grid(m, 0.25, 2.0, 200);
  auto t_grid = linear_grid(0.25, 2.0, 8);
  DensityTable tab = build_density_table(m, s_grid, t_grid, DensityProvenance::StableSeries);
  REQUIRE(tab.f.size() == 200 * 8);
  REQUIRE(tab.df_ds.size() == tab.f.size());
  CHECK(tab.model_id == m.id());
  CHECK(std::string(provenance_name(tab.provenance)) == "stable-series");

  for (std::size_t is = 0; is < s_grid.size(); ++is) {
    for (std::size_t it = 0; it < t_grid.size(); ++it) {
      CHECK(tab.value(is, it) >= 0.0);
      CHECK(tab.value(is, it) ==
            doctest::Approx(half_f(s_grid[is], t_grid[it])).epsilon(1e-6));
    }
  }
  CHECK(tab.validate(m).empty());

  // default grid covers the mass for the largest t
  auto ds = default_s_grid(m, 0.25, 2.0, 40);
  REQUIRE(ds.size() == 40);
  CHECK(ds.front() > 0.0);
  double tail = half_f(ds.back(), 2.0);
  CHECK(tail < 1e-6);
}
