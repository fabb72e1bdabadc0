#pragma once

// Potential measure of the subordinator and long-time mean-square-displacement
// scaling. The potential density u(t) is the occupation density of the
// subordinator range, U(t) = int_0^t u = E L(t), and the killed second moment
// obeys msd(t) = U(t) - int_0^t (phi(w)^2 + U(t-w)) P(T in dw).

#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "subdiff/bernstein.hpp"
#include "subdiff/boundary.hpp"
#include "subdiff/densities.hpp"
#include "subdiff/mc.hpp"

namespace subdiff {

struct PotentialTable {
  std::vector<double> t;
  std::vector<double> u_phi;  // potential density
  std::vector<double> U;      // cumulative potential
};

// Potential with fast repeated evaluation. Stable models use the closed forms
// u(t) = t^(beta-1)/Gamma(beta), U(t) = t^beta/Gamma(1+beta); other models are
// tabulated once on a log grid up to t_max and interpolated.
class Potential {
 public:
  Potential(const BernsteinModel& model, double t_max);

  double density(double t) const;  // u_phi(t), t > 0
  double value(double t) const;    // U(t), t >= 0
  double t_max() const { return t_max_; }
  const BernsteinModel& model() const { return model_; }

 private:
  BernsteinModel model_;
  double t_max_;
  bool closed_form_ = false;
  double beta_ = 0.0;
  // tabulated route: log-spaced t nodes, density and cumulative values
  std::vector<double> lt_, dens_, cum_;
  double head_gamma_ = 1.0;  // local power of U near the first node
  struct Quad;               // shared s-quadrature for the density integral
  std::shared_ptr<Quad> quad_;
  double density_quadrature(double t) const;
};

// single-shot conveniences (build a Potential internally)
double potential_density(const BernsteinModel& model, double t);
double potential(const BernsteinModel& model, double t);
PotentialTable potential_table(const BernsteinModel& model, const std::vector<double>& t_grid);

// numeric int_0^inf e^(-lambda t) u_phi(t) dt against the exact 1/Phi(lambda);
// integrates over (0, t_max] with t_max <= pot.t_max()
LaplacePair laplace_oracle_potential(const Potential& pot, double lambda, double t_max);
LaplacePair laplace_oracle_potential(const BernsteinModel& model, double lambda, double t_max);

// renewal identity (u_phi * levy_tail)(t) = 1; returns the convolution value
double potential_renewal_check(const Potential& pot, double t);

// killed second moment from the crossing law:
// U(t) - (1/n) sum over crossing samples w <= t of (phi(w)^2 + U(t-w))
double msd_formula(const Potential& pot, const Boundary& boundary, const CrossingLaw& law,
                   double t);
double msd_formula(const BernsteinModel& model, const Boundary& boundary, const CrossingLaw& law,
                   double t);

// long-time band constants for Phi(1/t) * msd(t), regular variation index
// gamma in (0, 1]: lower = gamma/((1+gamma), Gamma(1+gamma)), upper = 1/Gamma(1+gamma)
std::pair<double, double> asymptotic_bounds(double gamma);

struct ScalingReport {
  bool conclusive = false;  // needs at least one decade of t
  bool band_pass = false;   // all checked ratios inside the slackened band
  double gamma = 0.0;
  double lower = 0.0, upper = 0.0;  // band before slack
  double slack = 0.0;               // relative slack applied to the band
  double slope = 0.0;               // log-log slope over the checked decade
  double t_lo = 0.0, t_hi = 0.0;    // checked window (largest decade)
  std::vector<double> t;            // checked nodes
  std::vector<double> ratio;        // Phi(1/t) * msd at those nodes
  std::string summary;
};

// Band containment of Phi(1/t)*msd over the largest available decade with
// slack = max relative MC error + 10% finite-t allowance; the slope is
// reported, not asserted. boundary may be null (free case, msd = U).
ScalingReport scaling_verdict(const BernsteinModel& model, const Boundary* boundary,
                              const MsdEstimate& series);

}  // namespace subdiff
