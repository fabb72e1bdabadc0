#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace subdiff {

// phi(lambda) = lambda^beta, 0 < beta < 1.
struct StableKind {
  double beta;
};

// phi(lambda) = (lambda + m)^beta - m^beta, 0 < beta < 1, m > 0.
struct RelativisticKind {
  double beta;
  double m;
};

// Levy density sampled on an increasing grid, interpolated as a power law on
// each segment and continued as power laws past the ends:
//   nu(s) = nu.front() * (s/s.front())^exp0   for s < s.front()
//   nu(s) = nu.back()  * (s/s.back())^exp_inf for s > s.back()
// exp0 must lie in (-2, -1] (infinite activity with integrable first moment
// at zero) and exp_inf must be < -1 (finite tail mass).
struct TabulatedKind {
  std::vector<double> s;
  std::vector<double> nu;
  double exp0 = -1.5;
  double exp_inf = -2.5;
};

// Lower envelope Re psi(xi) >= c * xi^q for xi >= xi_min, with gamma = 2 - q.
// verified marks bounds established analytically (catalog models); fitted
// bounds on tabulated data are reported with verified = false and consumers
// must re-check the envelope where they use it.
struct OreyBound {
  double c = 0.0;
  double q = 0.0;
  double gamma = 2.0;
  double xi_min = 0.0;
  bool verified = false;
};

struct ValidationIssue {
  std::string what;
};

struct TabAux;  // precomputed per-segment data for the tabulated kind

class BernsteinModel {
 public:
  static BernsteinModel stable(double beta);
  static BernsteinModel relativistic(double beta, double m);
  static BernsteinModel tabulated(TabulatedKind t);

  // Laplace exponent and its analytic continuation psi(xi) = phi(-i xi).
  double phi(double lambda) const;
  std::complex<double> psi(double xi) const;
  std::complex<double> dpsi(double xi) const;

  double levy_density(double s) const;
  double levy_tail(double s) const;    // nu((s, inf))
  double tail_integral(double t) const;  // int_0^t levy_tail(s) ds
  double tail_mass(double a, double b) const;          // int_a^b levy_tail
  double tail_first_moment(double a, double b) const;  // int_a^b s*levy_tail

  // Index of regular variation of phi at zero. Analytic for the catalog
  // kinds; for tabulated data a log-log fit of phi over lambda in
  // [1e-4, 1e-2].
  double regular_variation_index() const;

  // mean jump int s nu(ds) = int_0^inf levy_tail, when finite
  std::optional<double> drift_at_zero() const;

  OreyBound orey_lower_bound(double xi_max = 1e4) const;

  // Scale u solving s * phi(1/u) = 1: the time scale at which the
  // subordinator run for duration s lives.
  double body_scale(double s) const;

  std::vector<ValidationIssue> validate() const;

  const std::string& name() const { return name_; }
  const std::string& id() const { return id_; }

  bool is_stable() const { return std::holds_alternative<StableKind>(kind_); }
  bool is_relativistic() const { return std::holds_alternative<RelativisticKind>(kind_); }
  bool is_tabulated() const { return std::holds_alternative<TabulatedKind>(kind_); }
  const StableKind* as_stable() const { return std::get_if<StableKind>(&kind_); }
  const RelativisticKind* as_relativistic() const { return std::get_if<RelativisticKind>(&kind_); }
  const TabulatedKind* as_tabulated() const { return std::get_if<TabulatedKind>(&kind_); }

 private:
  BernsteinModel() = default;
  std::variant<StableKind, RelativisticKind, TabulatedKind> kind_;
  std::shared_ptr<const TabAux> tab_;
  std::string name_;
  std::string id_;
};

// "stable:0.5", "relativistic:0.5,1.0", "tabulated:/path/to/levy.csv".
// The CSV has a header "s,nu" and may carry extrapolation exponents in
// comment lines "# exp0 <v>" / "# exp_inf <v>".
BernsteinModel parse_model(const std::string& text);

}  // namespace subdiff
