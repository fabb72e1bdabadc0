#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "subdiff/special.hpp"

using namespace subdiff;

TEST_CASE("upper incomplete gamma, positive order") {
  // sqrt(pi) * erfc(1)
  CHECK(upper_gamma(0.5, 1.0) == doctest::Approx(0.2788055852806619).epsilon(1e-12));
  // integer order has an elementary form: Gamma(3, 2) = e^{-2} (2^2 + 2*2 + 2)
  CHECK(upper_gamma(3.0, 2.0) == doctest::Approx(10.0 * std::exp(-2.0)).epsilon(1e-12));
  // complement against the complete function
  double a = 2.3, x = 1.7;
  CHECK(upper_gamma(a, x) + lower_gamma(a, x) == doctest::Approx(std::tgamma(a)).epsilon(1e-12));
}

TEST_CASE("upper incomplete gamma, zero and negative order") {
  // Gamma(0, 1) = E1(1)
  CHECK(upper_gamma(0.0, 1.0) == doctest::Approx(0.21938393439552029).epsilon(1e-10));
  // one rung of the downward recurrence from Gamma(0.5, 1)
  CHECK(upper_gamma(-0.5, 1.0) == doctest::Approx(0.17814771178156086).epsilon(1e-10));
  // recurrence consistency two rungs down: Gamma(a, x) = (Gamma(a+1,x) - x^a e^{-x}) / a
  double av = -1.3, xv = 0.8;
  double up = upper_gamma(av + 1.0, xv);
  double expect = (up - std::pow(xv, av) * std::exp(-xv)) / av;
  CHECK(upper_gamma(av, xv) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("lower incomplete gamma") {
  CHECK(lower_gamma(0.5, 1.0) == doctest::Approx(1.4936482656248541).epsilon(1e-12));
  CHECK(lower_gamma(1.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
  CHECK(lower_gamma(2.0, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("reciprocal gamma") {
  CHECK(rgamma(1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rgamma(0.5) == doctest::Approx(0.5641895835477563).epsilon(1e-14));
  CHECK(rgamma(1.5) == doctest::Approx(1.1283791670955126).epsilon(1e-14));
  CHECK(rgamma(5.0) == doctest::Approx(1.0 / 24.0).epsilon(1e-14));
  CHECK(rgamma(-0.5) == doctest::Approx(-0.28209479177387814).epsilon(1e-13));
  // finite zero at the poles
  CHECK(rgamma(0.0) == 0.0);
  CHECK(rgamma(-1.0) == 0.0);
  CHECK(rgamma(-2.0) == 0.0);
}

TEST_CASE("Kahan summation keeps addends below the running sum's ulp") {
  // naive accumulation drops every 1e-16 against a sum of order 1
  double naive = 1.0;
  KahanSum k;
  k.add(1.0);
  for (int i = 0; i < 10000; ++i) {
    naive += 1e-16;
    k.add(1e-16);
  }
  CHECK(naive == 1.0);
  CHECK(k.value() == doctest::Approx(1.0 + 1e-12).epsilon(1e-6));

  KahanSum tenth;
  for (int i = 0; i < 10; ++i) tenth.add(0.1);
  CHECK(tenth.value() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("least squares line fit recovers an exact line") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0, 4.5};
  std::vector<double> y;
  for (double v : x) y.push_back(2.0 + 3.0 * v);
  LineFit fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("grids") {
  auto lg = log_grid(0.1, 10.0, 5);
  REQUIRE(lg.size() == 5);
  CHECK(lg.front() == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(lg.back() == doctest::Approx(10.0).epsilon(1e-14));
  double ratio = lg[1] / lg[0];
  for (std::size_t i = 1; i + 1 < lg.size(); ++i) {
    CHECK(lg[i + 1] / lg[i] == doctest::Approx(ratio).epsilon(1e-12));
  }

  auto lin = linear_grid(0.0, 1.0, 5);
  REQUIRE(lin.size() == 5);
  CHECK(lin[0] == 0.0);
  CHECK(lin[2] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lin[4] == doctest::Approx(1.0).epsilon(1e-14));
}
