#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "subdiff/bernstein.hpp"
#include "subdiff/quad.hpp"

using namespace subdiff;

namespace {

// stable-mirror tabulated model: samples of nu(s) = beta/Gamma(1-beta) s^{-1-beta}
// at beta = 1/2; the power-law segment interpolation reproduces it exactly
BernsteinModel stable_mirror() {
  TabulatedKind tk;
  const double c = 0.28209479177387814;  // 0.5 / Gamma(0.5)
  const int n = 41;
  for (int i = 0; i < n; ++i) {
    double s = std::pow(10.0, -4.0 + 6.0 * double(i) / double(n - 1));
    tk.s.push_back(s);
    tk.nu.push_back(c * std::pow(s, -1.5));
  }
  tk.exp0 = -1.5;
  tk.exp_inf = -1.5;
  return BernsteinModel::tabulated(tk);
}

}  // namespace

TEST_CASE("stable Laplace exponent and characteristic values") {
  auto m = BernsteinModel::stable(0.5);
  CHECK(m.phi(4.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.phi(1.0) == doctest::Approx(1.0).epsilon(1e-12));

  // psi(1) = (1)^{1/2} rotated: (sqrt(2)/2)(1 - i)
  auto p = m.psi(1.0);
  CHECK(p.real() == doctest::Approx(0.7071067811865476).epsilon(1e-10));
  CHECK(p.imag() == doctest::Approx(-0.7071067811865476).epsilon(1e-10));

  // hermitian symmetry: psi(-xi) = conj(psi(xi))
  auto q = m.psi(-3.7);
  auto qq = m.psi(3.7);
  CHECK(q.real() == doctest::Approx(qq.real()).epsilon(1e-12));
  CHECK(q.imag() == doctest::Approx(-qq.imag()).epsilon(1e-12));
  CHECK(q.real() > 0.0);
}

TEST_CASE("stable tail functions") {
  auto m = BernsteinModel::stable(0.5);
  // tail nu((s,inf)) = s^{-1/2}/Gamma(1/2)
  CHECK(m.levy_tail(1.0) == doctest::Approx(0.5641895835477563).epsilon(1e-10));
  CHECK(m.levy_tail(4.0) == doctest::Approx(0.28209479177387814).epsilon(1e-10));
  // int_0^t tail = t^{1/2}/Gamma(3/2)
  CHECK(m.tail_integral(1.0) == doctest::Approx(1.1283791670955126).epsilon(1e-10));
  CHECK(m.tail_mass(0.0, 1.0) == doctest::Approx(1.1283791670955126).epsilon(1e-10));
  CHECK(m.tail_mass(1.0, 4.0) ==
        doctest::Approx(m.tail_integral(4.0) - m.tail_integral(1.0)).epsilon(1e-10));

  // density is the negative tail derivative
  double s = 0.7, h = 1e-5;
  double fd = -(m.levy_tail(s + h) - m.levy_tail(s - h)) / (2.0 * h);
  CHECK(m.levy_density(s) == doctest::Approx(fd).epsilon(1e-6));

  // first moment of the tail over a finite window against quadrature
  double num = gk_integrate([&](double u) { return u * m.levy_tail(u); }, 0.5, 2.0);
  CHECK(m.tail_first_moment(0.5, 2.0) == doctest::Approx(num).epsilon(1e-6));

  // infinite first moment at zero for the stable family
  CHECK_FALSE(m.drift_at_zero().has_value());
}

TEST_CASE("Laplace exponent is the tail transform") {
  // phi(lambda) = lambda int_0^inf e^{-lambda s} levy_tail(s) ds
  for (double beta : {0.3, 0.7}) {
    auto m = BernsteinModel::stable(beta);
    double lambda = 1.7;
    auto f = [&](double s) { return std::exp(-lambda * s) * m.levy_tail(s); };
    double numeric = lambda * (tanh_sinh_integrate(f, 0.0, 1.0) + exp_sinh_integrate(f, 1.0));
    CHECK(numeric == doctest::Approx(std::pow(lambda, beta)).epsilon(1e-7));
  }
}

TEST_CASE("relativistic model") {
  auto m = BernsteinModel::relativistic(0.5, 1.0);
  CHECK(m.phi(3.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.phi(0.0) == doctest::Approx(0.0));
  // finite mean jump: phi'(0) = beta m^{beta-1}
  auto drift = m.drift_at_zero();
  REQUIRE(drift.has_value());
  CHECK(*drift == doctest::Approx(0.5).epsilon(1e-8));

  // exponentially tilted tail: smaller than stable everywhere, same small-s blowup
  auto st = BernsteinModel::stable(0.5);
  CHECK(m.levy_tail(1.0) < st.levy_tail(1.0));
  // the tails differ by int (1 - e^{-m s}) d(nu) -> phi_stable(m) = 1 as eps -> 0
  CHECK(st.levy_tail(1e-6) - m.levy_tail(1e-6) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(m.levy_tail(1e-6) / st.levy_tail(1e-6) == doctest::Approx(1.0).epsilon(5e-3));
  CHECK(m.levy_tail(20.0) < 1e-8);

  CHECK(m.regular_variation_index() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("stable regular variation and Orey bound") {
  auto m = BernsteinModel::stable(0.5);
  CHECK(m.regular_variation_index() == doctest::Approx(0.5).epsilon(1e-8));

  OreyBound ob = m.orey_lower_bound();
  CHECK(ob.verified);
  CHECK(ob.gamma == doctest::Approx(1.5).epsilon(1e-8));
  // envelope actually holds at a few xi
  for (double xi : {1.0, 10.0, 100.0}) {
    if (xi >= ob.xi_min) CHECK(m.psi(xi).real() >= ob.c * std::pow(xi, ob.q) * (1.0 - 1e-12));
  }
}

TEST_CASE("catalog models validate cleanly") {
  CHECK(BernsteinModel::stable(0.5).validate().empty());
  CHECK(BernsteinModel::stable(0.3).validate().empty());
  CHECK(BernsteinModel::relativistic(0.7, 2.0).validate().empty());
  CHECK(stable_mirror().validate().empty());
}

TEST_CASE("tabulated stable mirror matches the closed forms") {
  auto tab = stable_mirror();
  auto st = BernsteinModel::stable(0.5);
  for (double lambda : {0.1, 1.0, 10.0}) {
    CHECK(tab.phi(lambda) == doctest::Approx(st.phi(lambda)).epsilon(0.02));
  }
  for (double s : {0.01, 1.0, 50.0}) {
    CHECK(tab.levy_tail(s) == doctest::Approx(st.levy_tail(s)).epsilon(0.02));
  }
  CHECK(tab.regular_variation_index() == doctest::Approx(0.5).epsilon(0.02));
  CHECK_FALSE(tab.orey_lower_bound().verified);

  // body scale solves s * phi(1/u) = 1
  double u = tab.body_scale(2.0);
  CHECK(2.0 * tab.phi(1.0 / u) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("constructor guards") {
  CHECK_THROWS_AS(BernsteinModel::stable(0.0), std::invalid_argument);
  CHECK_THROWS_AS(BernsteinModel::stable(1.0), std::invalid_argument);
  CHECK_THROWS_AS(BernsteinModel::relativistic(0.5, 0.0), std::invalid_argument);

  TabulatedKind bad;
  bad.s = {1.0, 0.5};  // not increasing
  bad.nu = {1.0, 1.0};
  CHECK_THROWS_AS(BernsteinModel::tabulated(bad), std::invalid_argument);

  TabulatedKind badexp;
  badexp.s = {0.1, 1.0};
  badexp.nu = {1.0, 0.1};
  badexp.exp0 = -2.5;  // first moment at zero diverges
  CHECK_THROWS_AS(BernsteinModel::tabulated(badexp), std::invalid_argument);
}

TEST_CASE("parse_model") {
  auto m = parse_model("stable:0.5");
  CHECK(m.is_stable());
  CHECK(m.as_stable()->beta == 0.5);

  auto r = parse_model("relativistic:0.5,2.0");
  CHECK(r.is_relativistic());
  CHECK(r.as_relativistic()->m == 2.0);

  CHECK_THROWS_AS(parse_model("stable:1.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model("unknown:1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_model("relativistic:0.5"), std::invalid_argument);

  // tabulated file round trip, exponent declarations included
  auto dir = std::filesystem::temp_directory_path() / "subdiff_bernstein_test";
  std::filesystem::create_directories(dir);
  auto p = dir / "levy.csv";
  {
    std::ofstream out(p);
    out << "# exp0 -1.5\n# exp_inf -1.5\ns,nu\n";
    const double c = 0.28209479177387814;
    for (int i = 0; i < 41; ++i) {
      double s = std::pow(10.0, -4.0 + 6.0 * double(i) / 40.0);
      out << s << "," << c * std::pow(s, -1.5) << "\n";
    }
  }
  auto tab = parse_model("tabulated:" + p.string());
  CHECK(tab.is_tabulated());
  CHECK(tab.phi(1.0) == doctest::Approx(1.0).epsilon(0.02));

  // missing exponent declarations cannot be accepted silently
  auto bare = dir / "bare.csv";
  std::ofstream(bare) << "s,nu\n0.1,1\n1,0.1\n";
  CHECK_THROWS_AS(parse_model("tabulated:" + bare.string()), std::runtime_error);
}

TEST_CASE("model ids are stable and distinct") {
  auto a = BernsteinModel::stable(0.5);
  auto b = BernsteinModel::stable(0.5);
  auto c = BernsteinModel::stable(0.7);
  CHECK(a.id() == b.id());
  CHECK(a.id() != c.id());
  CHECK_FALSE(a.name().empty());
}
