#pragma once

#include <complex>
#include <functional>
#include <vector>

namespace subdiff {

// Piecewise-quadratic interpolation of a slowly varying complex envelope
// A(xi) on [0, xi_max], built so that integrals of A(xi) * exp(-i*omega*xi)
// can be evaluated for any omega with the oscillatory factor integrated in
// closed form. Panel boundaries are chosen by marching in the envelope's own
// variation (log-magnitude plus unwrapped phase), so the panel count depends
// on how much A twists, not on omega or xi_max.
class FilonPanels {
 public:
  using Envelope = std::function<std::complex<double>(double)>;

  struct Options {
    double variation_budget = 0.05;  // nats+radians of envelope change per panel
    double rel_floor = 1e-14;        // |A| below rel_floor * max|A| ends the march
    std::size_t max_panels = 200000;
    double first_step_frac = 1e-4;   // initial trial step as fraction of xi_max
  };

  FilonPanels(const Envelope& env, double xi_max);
  FilonPanels(const Envelope& env, double xi_max, const Options& opt);

  // integral_0^{xi_max} A(xi) exp(-i*omega*xi) dxi
  std::complex<double> transform(double omega) const;

  std::size_t panel_count() const { return h_.size(); }
  double domain_end() const { return built_end_; }

 private:
  std::vector<double> x0_;  // panel left edges
  std::vector<double> h_;   // panel widths
  std::vector<std::complex<double>> c0_, c1_, c2_;  // local quadratic coeffs
  double built_end_ = 0.0;
};

// integral_0^h u^k exp(-i*omega*u) du for k = 0,1,2, switching to a series
// when |omega*h| is small. Exposed for tests.
void filon_moments(double omega, double h, std::complex<double> out[3]);

}  // namespace subdiff
