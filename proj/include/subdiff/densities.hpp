#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "subdiff/bernstein.hpp"

namespace subdiff {

// Thrown when an alternating series loses too many digits to cancellation to
// certify any of them. smallest_term_index reports where the terms bottomed
// out; callers switch representation instead of retrying.
class SeriesDivergence : public std::runtime_error {
 public:
  SeriesDivergence(const std::string& what, int idx)
      : std::runtime_error(what), smallest_term_index(idx) {}
  int smallest_term_index;
};

struct SeriesEval {
  double value = 0.0;
  double abs_error_estimate = 0.0;
  int terms_used = 0;
};

// One-sided stable density of index beta at unit time, via the convergent
// power series in x^{-beta}; valid for moderate-to-large x, cancels badly as
// x -> 0.
SeriesEval stable_unit_density(double beta, double x, int max_terms = 500);
SeriesEval stable_unit_density_deriv(double beta, double x, int max_terms = 500);

// Density of the inverse stable subordinator L(t) at s, and its t/s partial
// derivatives. Splits at x = t s^{-1/beta} >= crossover between the scaled
// unit-density route and the small-s power series.
double inverse_density_stable(double beta, double s, double t, double crossover = 1.0);
double inverse_density_stable_dt(double beta, double s, double t, double crossover = 1.0);
double inverse_density_stable_ds(double beta, double s, double t, double crossover = 1.0);

// Series form for the relativistic model. Refuses (throws SeriesDivergence or
// invalid_argument) outside its window s*m^beta <= 30 or under cancellation;
// the Fourier route below has no such window.
double relativistic_inverse_density(double beta, double m, double s, double t,
                                    int max_terms = 500);

// Fourier-route machinery for the subordinator density g(t; s) and the
// inverse density f_L(s; t) = int_0^t levy_tail(tau) g(t - tau; s) dtau.
// Oscillatory xi-integrals use quadratic envelope panels with exact
// oscillatory moments, so the cutoff scale never inflates the panel count.
class FourierEngine {
 public:
  struct Options {
    double abs_floor = 1e-12;      // envelope tail cut e^{-s Re psi} below this
    int pts_per_decade = 96;       // g-row sampling density in log t
    double u_min_factor = 1e-4;    // row start relative to body scale
    double variation_budget = 0.05;
  };

  explicit FourierEngine(BernsteinModel model);
  FourierEngine(BernsteinModel model, Options opt);

  // process-wide engine cache keyed by model id
  static std::shared_ptr<FourierEngine> shared(const BernsteinModel& model);

  const BernsteinModel& model() const { return model_; }

  // subordinator density in t at operational time s, plus partials
  double g(double t, double s) const;
  double g_dt(double t, double s) const;
  double g_ds(double t, double s) const;

  // inverse-subordinator density f_L(s; t) and partials by exact product
  // integration of the tail kernel against a sampled g-row
  double inverse_density(double s, double t) const;
  double inverse_density_dt(double s, double t) const;
  double inverse_density_ds(double s, double t) const;
  // all three at once; the product-integration moments are shared, so this
  // costs the same as a single partial
  void inverse_all(double s, double t, double out[3]) const;

  // g and f_L sampled along a shared logarithmic t-grid for one s; rows are
  // cached so Laplace-transform quadratures and tables reuse them
  struct Row {
    double s = 0.0;
    std::vector<double> t;              // increasing, log-spaced
    std::vector<double> g, g_dt, g_ds;  // subordinator density row
    std::vector<double> f, f_dt, f_ds;  // inverse density row
  };
  std::shared_ptr<const Row> row(double s, double t_max) const;

 private:
  struct Bundle;
  std::shared_ptr<const Bundle> bundle(double s) const;
  void conv_all(const Row& row, double t, double out[3]) const;

  BernsteinModel model_;
  Options opt_;
  OreyBound orey_;
  mutable std::mutex mu_;
  mutable std::map<double, std::shared_ptr<const Bundle>> bundles_;
  mutable std::map<std::pair<double, double>, std::shared_ptr<const Row>> rows_;
};

// Routed single evaluations (series where available, Fourier otherwise).
double inverse_density(const BernsteinModel& model, double s, double t);
double inverse_density_dt(const BernsteinModel& model, double s, double t);
double inverse_density_ds(const BernsteinModel& model, double s, double t);
double subordinator_density(const BernsteinModel& model, double t, double s);

// int_0^{t_max} e^{-lambda t} f_L(s; t) dt by trapezoid over a cached row,
// against the closed form (phi(lambda)/lambda) e^{-s phi(lambda)}.
struct LaplacePair {
  double numeric = 0.0;
  double analytic = 0.0;
};
LaplacePair laplace_oracle_fL(const FourierEngine& engine, double s, double lambda,
                              double t_max);

// Residual of the governing identity d^phi/dt f_L = -d/ds f_L on a uniform
// t-grid, normalized by max |d/ds f_L|.
double governing_residual_fL(const FourierEngine& engine, double s, double t_max,
                             std::size_t steps);

enum class DensityProvenance { FourierConvolution, StableSeries, RelativisticSeries };

const char* provenance_name(DensityProvenance p);

struct DensityTable {
  std::vector<double> s, t;
  std::vector<double> f, df_ds, df_dt;  // [is * t.size() + it]
  DensityProvenance provenance = DensityProvenance::FourierConvolution;
  std::string model_id;

  double raw(std::size_t is, std::size_t it) const { return f[is * t.size() + it]; }
  // negative noise floor is clamped at read time
  double value(std::size_t is, std::size_t it) const {
    double v = raw(is, it);
    return v < 0.0 ? 0.0 : v;
  }
  std::vector<ValidationIssue> validate(const BernsteinModel& model) const;
};

DensityTable build_density_table(const BernsteinModel& model, std::vector<double> s_grid,
                                 std::vector<double> t_grid,
                                 DensityProvenance route, bool with_derivatives = true);

// default grids for a table over t in [t_min, t_max]
std::vector<double> default_s_grid(const BernsteinModel& model, double t_min, double t_max,
                                   std::size_t n);

}  // namespace subdiff
