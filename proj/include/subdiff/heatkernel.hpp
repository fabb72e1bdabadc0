#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>

#include "subdiff/bernstein.hpp"
#include "subdiff/densities.hpp"

namespace subdiff {

// standard Gaussian heat kernel with variance parameter s
double bm_density(double x, double s);

// Source of the time-change density f_L(s; t) used by the kernel integrals.
// Implementations trade generality for speed; all expose an effective support
// bound in s so quadratures can truncate.
class DensityProvider {
 public:
  virtual ~DensityProvider() = default;
  virtual double f(double s, double t) const = 0;
  virtual double df_ds(double s, double t) const = 0;
  virtual double df_dt(double s, double t) const = 0;
  virtual double s_upper(double t) const = 0;
  virtual std::string describe() const = 0;
};

// series route for the stable model; values below the cancellation floor of
// the series are reported as zero
class StableSeriesProvider : public DensityProvider {
 public:
  explicit StableSeriesProvider(double beta);
  double f(double s, double t) const override;
  double df_ds(double s, double t) const override;
  double df_dt(double s, double t) const override;
  double s_upper(double t) const override;
  std::string describe() const override;

 private:
  double beta_;
};

// series route for the relativistic model; throws outside the series window
class RelativisticSeriesProvider : public DensityProvider {
 public:
  RelativisticSeriesProvider(double beta, double m);
  double f(double s, double t) const override;
  double df_ds(double s, double t) const override;
  double df_dt(double s, double t) const override;
  double s_upper(double t) const override;
  std::string describe() const override;

 private:
  double beta_, m_;
};

// generic route through the oscillatory-integral engine; works for any model,
// slowest of the providers
class FourierProvider : public DensityProvider {
 public:
  explicit FourierProvider(BernsteinModel model);
  double f(double s, double t) const override;
  double df_ds(double s, double t) const override;
  double df_dt(double s, double t) const override;
  double s_upper(double t) const override;
  std::string describe() const override;

 private:
  std::shared_ptr<FourierEngine> engine_;
};

// bilinear interpolation over a prebuilt table; clamps outside the grid
class TableProvider : public DensityProvider {
 public:
  explicit TableProvider(DensityTable table);
  double f(double s, double t) const override;
  double df_ds(double s, double t) const override;
  double df_dt(double s, double t) const override;
  double s_upper(double t) const override;
  std::string describe() const override;

 private:
  double interp(const std::vector<double>& grid, double s, double t) const;
  DensityTable table_;
};

std::shared_ptr<const DensityProvider> default_provider(const BernsteinModel& model);

// Heat kernel of the time-changed process,
//   p(t, x; y) = int_0^inf bm_density(x - y, s) f_L(s; t) ds,
// with spatial and temporal partials. Evaluations are memoized on (t, |x-y|).
// First spatial derivatives jump across the diagonal, so x == y is rejected
// for p_dx and p_dxx.
class KernelEvaluator {
 public:
  explicit KernelEvaluator(BernsteinModel model,
                           std::shared_ptr<const DensityProvider> provider = nullptr);

  double p(double t, double x, double y) const;
  double p_dx(double t, double x, double y) const;
  double p_dxx(double t, double x, double y) const;
  double p_dt(double t, double x, double y) const;

  // int_0^{t_max} e^{-lambda t} p(t, x; y) dt against the closed form
  LaplacePair laplace_oracle(double x_minus_y, double lambda, double t_max) const;

  // relative defect of int_0^inf s^{-1/2} e^{-d^2/(2s) - z s} ds
  // = sqrt(pi/z) e^{-d sqrt(2 z)}
  static double bessel_identity_residual(double d, double z);

  // max_k |D^phi p(t_k) - 0.5 p_xx(t_k)| / max |0.5 p_xx| on a uniform grid
  double governing_residual(double x, double y, double t_max, std::size_t steps) const;

  // one-sided d -> 0 limits of p_dx at +eps and -eps; they approach
  // -+ levy_tail(t)/2
  std::pair<double, double> diagonal_flux(double t, double eps) const;

  const BernsteinModel& model() const { return model_; }
  const DensityProvider& provider() const { return *provider_; }
  std::size_t memo_size() const;

 private:
  double integral(double t, double d, int kind) const;  // kind 0:p 1:|dx| 2:dxx 3:dt

  BernsteinModel model_;
  std::shared_ptr<const DensityProvider> provider_;
  mutable std::mutex mu_;
  mutable std::map<std::tuple<int, double, double>, double> memo_;
};

}  // namespace subdiff
