#include "subdiff/fourier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace subdiff {

namespace {

// Variation between two envelope samples: |d log|A|| + |d arg(A)|.
// Phase is taken from the ratio, so it is alias-free only while the true
// phase step stays under pi; the marching loop keeps steps well below that.
double sample_variation(std::complex<double> a, std::complex<double> b) {
  double ma = std::abs(a), mb = std::abs(b);
  if (ma == 0.0 || mb == 0.0) return 1e9;
  std::complex<double> r = b / a;
  return std::fabs(std::log(std::abs(r))) + std::fabs(std::arg(r));
}

}  // namespace

void filon_moments(double omega, double h, std::complex<double> out[3]) {
  const double z = omega * h;
  if (std::fabs(z) < 0.5) {
    // M_k = sum_j (-i*omega)^j h^{k+j+1} / (j! (k+j+1))
    const std::complex<double> miw(0.0, -omega);
    for (int k = 0; k < 3; ++k) {
      std::complex<double> term = std::pow(h, k + 1);
      std::complex<double> sum = term / double(k + 1);
      for (int j = 1; j <= 14; ++j) {
        term *= miw * h / double(j);
        sum += term / double(k + j + 1);
      }
      out[k] = sum;
    }
    return;
  }
  const std::complex<double> w(0.0, -omega);  // d/du exp(w u) factor
  const std::complex<double> e = std::exp(w * h);
  out[0] = (e - 1.0) / w;
  out[1] = (h * e - out[0]) / w;
  out[2] = (h * h * e - 2.0 * out[1]) / w;
}

FilonPanels::FilonPanels(const Envelope& env, double xi_max)
    : FilonPanels(env, xi_max, Options{}) {}

FilonPanels::FilonPanels(const Envelope& env, double xi_max, const Options& opt) {
  if (!(xi_max > 0.0)) throw std::invalid_argument("FilonPanels: xi_max must be positive");
  const double budget = opt.variation_budget;

  double x = 0.0;
  std::complex<double> fx = env(0.0);
  double peak = std::abs(fx);
  double step = xi_max * opt.first_step_frac;
  if (step <= 0.0) step = xi_max * 1e-6;
  const double min_step = xi_max * 1e-13;

  while (x < xi_max) {
    double h = std::min(step, xi_max - x);
    std::complex<double> f1, fm;
    // Shrink until both half-intervals sit inside the variation budget and
    // the two halves agree with the whole (guards phase aliasing and kinks).
    for (;;) {
      f1 = env(x + h);
      fm = env(x + 0.5 * h);
      double v_whole = sample_variation(fx, f1);
      double v_halves = sample_variation(fx, fm) + sample_variation(fm, f1);
      bool ok = v_halves <= budget && v_whole <= 0.7 &&
                v_halves <= 1.4 * v_whole + 0.25 * budget;
      if (ok || h <= min_step) break;
      h *= 0.5;
    }

    x0_.push_back(x);
    h_.push_back(h);
    // Quadratic through (0,f0), (h/2,fm), (h,f1) in local coordinates.
    c0_.push_back(fx);
    c1_.push_back((4.0 * fm - 3.0 * fx - f1) / h);
    c2_.push_back(2.0 * (fx - 2.0 * fm + f1) / (h * h));

    x += h;
    fx = f1;
    peak = std::max(peak, std::max(std::abs(fm), std::abs(f1)));

    // Panel accepted comfortably under budget: allow growth.
    step = std::min(h * 2.0, xi_max);

    if (std::abs(fx) < opt.rel_floor * peak) break;  // envelope spent
    if (x0_.size() >= opt.max_panels)
      throw std::runtime_error("FilonPanels: panel cap exceeded; envelope varies too fast");
  }
  built_end_ = x;
}

std::complex<double> FilonPanels::transform(double omega) const {
  std::complex<double> acc(0.0, 0.0);
  std::complex<double> m[3];
  for (std::size_t p = 0; p < h_.size(); ++p) {
    filon_moments(omega, h_[p], m);
    std::complex<double> panel = c0_[p] * m[0] + c1_[p] * m[1] + c2_[p] * m[2];
    const double ph = -omega * x0_[p];
    acc += std::polar(1.0, ph) * panel;
  }
  return acc;
}

}  // namespace subdiff
