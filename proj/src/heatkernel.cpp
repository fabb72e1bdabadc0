#include "subdiff/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "subdiff/nonlocal_op.hpp"
#include "subdiff/quad.hpp"
#include "subdiff/special.hpp"

namespace subdiff {

namespace {
constexpr double kPi = std::numbers::pi;
const double kSqrt2OverPi = std::sqrt(2.0 / kPi);
}  // namespace

double bm_density(double x, double s) {
  if (!(s > 0.0)) throw std::invalid_argument("bm_density: variance parameter must be positive");
  return std::exp(-x * x / (2.0 * s)) / std::sqrt(2.0 * kPi * s);
}

// ---------------------------------------------------------------------------
// providers

StableSeriesProvider::StableSeriesProvider(double beta) : beta_(beta) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw std::invalid_argument("StableSeriesProvider: beta must lie in (0,1)");
  }
}

double StableSeriesProvider::f(double s, double t) const {
  if (beta_ == 0.5) {
    // closed form; keeps bulk kernel tabulation cheap
    return std::exp(-s * s / (4.0 * t)) / std::sqrt(kPi * t);
  }
  try {
    return inverse_density_stable(beta_, s, t);
  } catch (const SeriesDivergence&) {
    return 0.0;  // below the certifiable floor of the series
  }
}

double StableSeriesProvider::df_ds(double s, double t) const {
  if (beta_ == 0.5) {
    return -s / (2.0 * t) * std::exp(-s * s / (4.0 * t)) / std::sqrt(kPi * t);
  }
  try {
    return inverse_density_stable_ds(beta_, s, t);
  } catch (const SeriesDivergence&) {
    return 0.0;
  }
}

double StableSeriesProvider::df_dt(double s, double t) const {
  if (beta_ == 0.5) {
    double f0 = std::exp(-s * s / (4.0 * t)) / std::sqrt(kPi * t);
    return (s * s / (4.0 * t * t) - 0.5 / t) * f0;
  }
  try {
    return inverse_density_stable_dt(beta_, s, t);
  } catch (const SeriesDivergence&) {
    return 0.0;
  }
}

double StableSeriesProvider::s_upper(double t) const { return 40.0 * std::pow(t, beta_); }

std::string StableSeriesProvider::describe() const {
  return "stable-series(beta=" + std::to_string(beta_) + ")";
}

RelativisticSeriesProvider::RelativisticSeriesProvider(double beta, double m)
    : beta_(beta), m_(m) {
  if (!(beta > 0.0 && beta < 1.0) || !(m > 0.0)) {
    throw std::invalid_argument("RelativisticSeriesProvider: need beta in (0,1), m > 0");
  }
}

double RelativisticSeriesProvider::f(double s, double t) const {
  try {
    return relativistic_inverse_density(beta_, m_, s, t);
  } catch (const SeriesDivergence&) {
    return 0.0;
  }
}

double RelativisticSeriesProvider::df_ds(double s, double t) const {
  double h = std::max(1e-8, 6e-6 * s);
  if (s > h) return (f(s + h, t) - f(s - h, t)) / (2.0 * h);
  return (f(s + h, t) - f(s, t)) / h;
}

double RelativisticSeriesProvider::df_dt(double s, double t) const {
  double h = 6e-6 * t;
  return (f(s, t + h) - f(s, t - h)) / (2.0 * h);
}

double RelativisticSeriesProvider::s_upper(double t) const {
  double phi = std::pow(1.0 / t + m_, beta_) - std::pow(m_, beta_);
  return 40.0 / phi;
}

std::string RelativisticSeriesProvider::describe() const {
  return "relativistic-series(beta=" + std::to_string(beta_) + ",m=" + std::to_string(m_) + ")";
}

FourierProvider::FourierProvider(BernsteinModel model)
    : engine_(FourierEngine::shared(model)) {}

double FourierProvider::f(double s, double t) const {
  if (s == 0.0) return engine_->model().levy_tail(t);
  return engine_->inverse_density(s, t);
}

double FourierProvider::df_ds(double s, double t) const {
  return engine_->inverse_density_ds(s, t);
}

double FourierProvider::df_dt(double s, double t) const {
  return engine_->inverse_density_dt(s, t);
}

double FourierProvider::s_upper(double t) const {
  return 40.0 / engine_->model().phi(1.0 / t);
}

std::string FourierProvider::describe() const {
  return "fourier(" + engine_->model().id() + ")";
}

TableProvider::TableProvider(DensityTable table) : table_(std::move(table)) {
  if (table_.s.size() < 2 || table_.t.size() < 2) {
    throw std::invalid_argument("TableProvider: table needs at least a 2x2 grid");
  }
}

double TableProvider::interp(const std::vector<double>& grid, double s, double t) const {
  const auto& sv = table_.s;
  const auto& tv = table_.t;
  auto locate = [](const std::vector<double>& v, double x) {
    std::size_t i = std::upper_bound(v.begin(), v.end(), x) - v.begin();
    if (i == 0) return std::size_t(0);
    if (i >= v.size()) return v.size() - 2;
    return i - 1;
  };
  std::size_t is = locate(sv, s), it = locate(tv, t);
  double as = std::clamp((s - sv[is]) / (sv[is + 1] - sv[is]), 0.0, 1.0);
  double at = std::clamp((t - tv[it]) / (tv[it + 1] - tv[it]), 0.0, 1.0);
  const std::size_t nt = tv.size();
  double v00 = grid[is * nt + it], v01 = grid[is * nt + it + 1];
  double v10 = grid[(is + 1) * nt + it], v11 = grid[(is + 1) * nt + it + 1];
  return (1 - as) * ((1 - at) * v00 + at * v01) + as * ((1 - at) * v10 + at * v11);
}

double TableProvider::f(double s, double t) const {
  double v = interp(table_.f, s, t);
  return v < 0.0 ? 0.0 : v;
}

double TableProvider::df_ds(double s, double t) const {
  if (table_.df_ds.empty()) throw std::logic_error("TableProvider: table built without derivatives");
  return interp(table_.df_ds, s, t);
}

double TableProvider::df_dt(double s, double t) const {
  if (table_.df_dt.empty()) throw std::logic_error("TableProvider: table built without derivatives");
  return interp(table_.df_dt, s, t);
}

double TableProvider::s_upper(double) const { return table_.s.back(); }

std::string TableProvider::describe() const {
  return std::string("table(") + provenance_name(table_.provenance) + "," + table_.model_id + ")";
}

std::shared_ptr<const DensityProvider> default_provider(const BernsteinModel& model) {
  if (model.is_stable()) {
    return std::make_shared<StableSeriesProvider>(model.as_stable()->beta);
  }
  return std::make_shared<FourierProvider>(model);
}

// ---------------------------------------------------------------------------
// KernelEvaluator

KernelEvaluator::KernelEvaluator(BernsteinModel model,
                                 std::shared_ptr<const DensityProvider> provider)
    : model_(std::move(model)), provider_(std::move(provider)) {
  if (!provider_) provider_ = default_provider(model_);
}

std::size_t KernelEvaluator::memo_size() const {
  std::lock_guard<std::mutex> lk(mu_);
  return memo_.size();
}

double KernelEvaluator::integral(double t, double d, int kind) const {
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = memo_.find({kind, t, d});
    if (it != memo_.end()) return it->second;
  }
  const double d2 = d * d;
  auto integrand = [&](double r) -> double {
    double s = r * r;
    double expo =
        (d2 > 0.0)
            ? (s > 0.0 ? -d2 / (2.0 * s) : -std::numeric_limits<double>::infinity())
            : 0.0;
    switch (kind) {
      case 0: {
        if (expo < -700.0) return 0.0;
        double fv = provider_->f(s, t);
        return std::exp(expo) * fv;
      }
      case 1: {
        double lw = expo - 2.0 * std::log(std::max(r, 1e-300));
        if (lw < -700.0) return 0.0;
        return std::exp(lw) * provider_->f(s, t);
      }
      case 2: {
        double l2 = expo - 2.0 * std::log(std::max(r, 1e-300));
        double l4 = expo - 4.0 * std::log(std::max(r, 1e-300));
        double a = (l4 < -700.0) ? 0.0 : d2 * std::exp(l4);
        double b = (l2 < -700.0) ? 0.0 : std::exp(l2);
        if (a == 0.0 && b == 0.0) return 0.0;
        return (a - b) * provider_->f(s, t);
      }
      default: {
        if (expo < -700.0) return 0.0;
        return std::exp(expo) * provider_->df_dt(s, t);
      }
    }
  };
  double R = std::sqrt(provider_->s_upper(t));
  QuadOpts q;
  q.rel_tol = 1e-9;
  q.abs_tol = 1e-14;
  double val = kSqrt2OverPi * gk_integrate(integrand, 0.0, R, q);
  std::lock_guard<std::mutex> lk(mu_);
  memo_.emplace(std::make_tuple(kind, t, d), val);
  return val;
}

double KernelEvaluator::p(double t, double x, double y) const {
  if (t < 0.0) throw std::invalid_argument("KernelEvaluator::p: t must be nonnegative");
  double d = std::abs(x - y);
  if (t == 0.0) {
    if (d == 0.0) throw std::domain_error("KernelEvaluator::p: point mass at t = 0 on the diagonal");
    return 0.0;
  }
  return integral(t, d, 0);
}

double KernelEvaluator::p_dx(double t, double x, double y) const {
  if (!(t > 0.0)) throw std::invalid_argument("KernelEvaluator::p_dx: t must be positive");
  double d = x - y;
  if (d == 0.0) {
    throw std::domain_error(
        "KernelEvaluator::p_dx: one-sided limits differ across the diagonal; evaluate off it");
  }
  return -d * integral(t, std::abs(d), 1);
}

double KernelEvaluator::p_dxx(double t, double x, double y) const {
  if (!(t > 0.0)) throw std::invalid_argument("KernelEvaluator::p_dxx: t must be positive");
  double d = std::abs(x - y);
  if (d == 0.0) {
    throw std::domain_error("KernelEvaluator::p_dxx: second derivative diverges on the diagonal");
  }
  return integral(t, d, 2);
}

double KernelEvaluator::p_dt(double t, double x, double y) const {
  if (!(t > 0.0)) throw std::invalid_argument("KernelEvaluator::p_dt: t must be positive");
  return integral(t, std::abs(x - y), 3);
}

LaplacePair KernelEvaluator::laplace_oracle(double x_minus_y, double lambda,
                                            double t_max) const {
  if (!(lambda > 0.0)) throw std::invalid_argument("laplace_oracle: lambda must be positive");
  double d = std::abs(x_minus_y);
  QuadOpts q;
  q.rel_tol = 1e-9;
  double numeric = gk_integrate(
      [&](double t) { return t <= 0.0 ? 0.0 : std::exp(-lambda * t) * p(t, d, 0.0); }, 0.0,
      t_max, q);
  double phi = model_.phi(lambda);
  double root = std::sqrt(2.0 * phi);
  double analytic = phi / lambda * std::exp(-d * root) / root;
  return {numeric, analytic};
}

double KernelEvaluator::bessel_identity_residual(double d, double z) {
  if (!(z > 0.0)) throw std::invalid_argument("bessel_identity_residual: z must be positive");
  double R = std::sqrt(42.0 / z) + std::abs(d);
  QuadOpts q;
  q.rel_tol = 1e-11;
  double lhs = 2.0 * gk_integrate(
                         [&](double r) {
                           double expo = -z * r * r;
                           if (r > 0.0) expo -= d * d / (2.0 * r * r);
                           return expo < -700.0 ? 0.0 : std::exp(expo);
                         },
                         0.0, R, q);
  double rhs = std::sqrt(kPi / z) * std::exp(-std::abs(d) * std::sqrt(2.0 * z));
  return std::abs(lhs - rhs) / rhs;
}

double KernelEvaluator::governing_residual(double x, double y, double t_max,
                                           std::size_t steps) const {
  if (x == y) throw std::domain_error("governing_residual: needs x != y");
  if (steps < 4) throw std::invalid_argument("governing_residual: steps must be >= 4");
  double dt = t_max / double(steps);
  std::vector<double> vals(steps + 1, 0.0);
  std::vector<double> rhs(steps + 1, 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    double tk = dt * double(k);
    vals[k] = p(tk, x, y);
    rhs[k] = 0.5 * p_dxx(tk, x, y);
  }
  auto w = memory_weights(model_, dt, steps);
  TimeGridFunction F{0.0, dt, vals};
  double scale = 0.0;
  for (double v : rhs) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  // the kernel rises from zero non-smoothly, so the first tenth of the
  // horizon is excluded from the max (the history sum still covers it)
  std::size_t k_lo = std::max<std::size_t>(1, steps / 10);
  double worst = 0.0;
  for (std::size_t k = k_lo; k <= steps; ++k) {
    worst = std::max(worst, std::abs(apply_nonlocal_derivative(w, F, k) - rhs[k]));
  }
  return worst / scale;
}

std::pair<double, double> KernelEvaluator::diagonal_flux(double t, double eps) const {
  if (!(eps > 0.0)) throw std::invalid_argument("diagonal_flux: eps must be positive");
  return {p_dx(t, eps, 0.0), p_dx(t, -eps, 0.0)};
}

}  // namespace subdiff
