#include "subdiff/densities.hpp"

#include <boost/math/special_functions/sin_pi.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "subdiff/fourier.hpp"
#include "subdiff/nonlocal_op.hpp"
#include "subdiff/special.hpp"

namespace subdiff {
namespace {

constexpr double kPi = std::numbers::pi;

// Alternating-series accumulator. Tracks the largest and smallest term so the
// caller can refuse results where cancellation ate more than 12 digits.
struct SeriesGuard {
  KahanSum sum;
  double max_abs = 0.0;
  double min_abs = std::numeric_limits<double>::infinity();
  int min_idx = -1;

  void add(double term, int idx) {
    sum.add(term);
    double a = std::abs(term);
    if (a > max_abs) max_abs = a;
    if (a > 0.0 && a < min_abs) {
      min_abs = a;
      min_idx = idx;
    }
  }
  void check(const char* what) const {
    double v = std::abs(sum.value());
    if (max_abs > 1e12 * std::max(v, 1e-300)) {
      throw SeriesDivergence(std::string(what) +
                                 ": cancellation exceeds 12 digits, result not certifiable",
                             min_idx);
    }
  }
};

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

SeriesEval stable_unit_density(double beta, double x, int max_terms) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("stable_unit_density: beta must lie in (0,1)");
  if (!(x > 0.0)) throw std::invalid_argument("stable_unit_density: x must be positive");
  SeriesGuard acc;
  const double lx = std::log(x);
  double last = 0.0;
  int used = 0, quiet = 0;
  bool converged = false;
  for (int j = 1; j <= max_terms; ++j) {
    double sp = boost::math::sin_pi(beta * j);
    ++used;
    if (sp == 0.0) continue;
    double lmag = std::lgamma(1.0 + beta * j) - std::lgamma(j + 1.0) + std::log(std::abs(sp)) -
                  (1.0 + beta * j) * lx - std::log(kPi);
    if (lmag > 690.0) {
      throw SeriesDivergence("stable_unit_density: terms overflow before converging",
                             acc.min_idx < 0 ? j : acc.min_idx);
    }
    double term = ((j % 2 == 1) ? 1.0 : -1.0) * sgn(sp) * std::exp(lmag);
    acc.add(term, j);
    last = std::abs(term);
    if (last < 1e-17 * std::max(std::abs(acc.sum.value()), 1e-300)) {
      if (++quiet >= 2) {
        converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
  }
  // a truncated tail can dominate the sum without tripping the cancellation
  // ratio, so exhaustion itself is a failure
  if (!converged) {
    throw SeriesDivergence("stable_unit_density: series truncated before converging",
                           acc.min_idx);
  }
  acc.check("stable_unit_density");
  return {acc.sum.value(), last, used};
}

SeriesEval stable_unit_density_deriv(double beta, double x, int max_terms) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("stable_unit_density_deriv: beta must lie in (0,1)");
  if (!(x > 0.0)) throw std::invalid_argument("stable_unit_density_deriv: x must be positive");
  SeriesGuard acc;
  const double lx = std::log(x);
  double last = 0.0;
  int used = 0, quiet = 0;
  bool converged = false;
  for (int j = 1; j <= max_terms; ++j) {
    double sp = boost::math::sin_pi(beta * j);
    ++used;
    if (sp == 0.0) continue;
    double lmag = std::lgamma(1.0 + beta * j) - std::lgamma(j + 1.0) + std::log(std::abs(sp)) +
                  std::log1p(beta * j) - (2.0 + beta * j) * lx - std::log(kPi);
    if (lmag > 690.0) {
      throw SeriesDivergence("stable_unit_density_deriv: terms overflow before converging",
                             acc.min_idx < 0 ? j : acc.min_idx);
    }
    // d/dx of x^{-1-beta j} flips the sign relative to the density term
    double term = ((j % 2 == 0) ? 1.0 : -1.0) * sgn(sp) * std::exp(lmag);
    acc.add(term, j);
    last = std::abs(term);
    if (last < 1e-17 * std::max(std::abs(acc.sum.value()), 1e-300)) {
      if (++quiet >= 2) {
        converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
  }
  if (!converged) {
    throw SeriesDivergence("stable_unit_density_deriv: series truncated before converging",
                           acc.min_idx);
  }
  acc.check("stable_unit_density_deriv");
  return {acc.sum.value(), last, used};
}

namespace {

// Power series in s for the inverse stable density and its partials.
// mode 0: value, mode 1: d/dt, mode 2: d/ds.
double stable_power_series(double beta, double s, double t, int mode, int max_terms) {
  SeriesGuard acc;
  const double ls = s > 0.0 ? std::log(s) : 0.0;  // s == 0 handled via jj guard
  const double lt = std::log(t);
  int quiet = 0;
  bool converged = false;
  for (int j = (mode == 2 ? 1 : 0); j <= max_terms; ++j) {
    double u = beta * (j + 1);
    double sp = boost::math::sin_pi(u);
    if (sp == 0.0) continue;
    int jj = (mode == 2) ? j - 1 : j;  // power of s in this term
    if (s == 0.0 && jj > 0) {
      converged = true;  // all later terms carry positive powers of s
      break;
    }
    double lmag = std::lgamma(1.0 + u) - std::lgamma(j + 2.0) + std::log(std::abs(sp)) -
                  std::log(kPi) - std::log(beta) - u * lt + jj * ls;
    double sign = ((j % 2 == 0) ? 1.0 : -1.0) * sgn(sp);
    if (mode == 1) {
      lmag += std::log(u) - lt;
      sign = -sign;
    } else if (mode == 2) {
      lmag += std::log(double(j));
    }
    if (lmag > 690.0) {
      throw SeriesDivergence("inverse_density_stable: series overflows before converging",
                             acc.min_idx < 0 ? j : acc.min_idx);
    }
    double term = sign * std::exp(lmag);
    acc.add(term, j);
    if (std::abs(term) < 1e-17 * std::max(std::abs(acc.sum.value()), 1e-300)) {
      if (++quiet >= 2) {
        converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
  }
  // exhausting the budget mid-growth leaves the sum dominated by the cut
  // tail; that garbage passes the cancellation ratio, so catch it here
  if (!converged) {
    throw SeriesDivergence("inverse_density_stable: series truncated before converging",
                           acc.min_idx);
  }
  acc.check("inverse_density_stable");
  return acc.sum.value();
}

void check_stable_args(double beta, double s, double t, const char* who) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument(std::string(who) + ": beta must lie in (0,1)");
  if (!(s >= 0.0)) throw std::invalid_argument(std::string(who) + ": s must be nonnegative");
  if (!(t > 0.0)) throw std::invalid_argument(std::string(who) + ": t must be positive");
}

}  // namespace

double inverse_density_stable(double beta, double s, double t, double crossover) {
  check_stable_args(beta, s, t, "inverse_density_stable");
  if (s == 0.0) return std::pow(t, -beta) * rgamma(1.0 - beta);
  double x = t * std::pow(s, -1.0 / beta);
  if (x >= crossover) {
    return (t / beta) * std::pow(s, -1.0 - 1.0 / beta) * stable_unit_density(beta, x).value;
  }
  return stable_power_series(beta, s, t, 0, 500);
}

double inverse_density_stable_dt(double beta, double s, double t, double crossover) {
  check_stable_args(beta, s, t, "inverse_density_stable_dt");
  if (s == 0.0) return -beta * std::pow(t, -beta - 1.0) * rgamma(1.0 - beta);
  double x = t * std::pow(s, -1.0 / beta);
  if (x >= crossover) {
    double g = stable_unit_density(beta, x).value;
    double gp = stable_unit_density_deriv(beta, x).value;
    return (1.0 / beta) * std::pow(s, -1.0 - 1.0 / beta) * (g + x * gp);
  }
  return stable_power_series(beta, s, t, 1, 500);
}

double inverse_density_stable_ds(double beta, double s, double t, double crossover) {
  check_stable_args(beta, s, t, "inverse_density_stable_ds");
  if (s == 0.0) return -std::pow(t, -2.0 * beta) * rgamma(1.0 - 2.0 * beta);
  double x = t * std::pow(s, -1.0 / beta);
  if (x >= crossover) {
    double g = stable_unit_density(beta, x).value;
    double gp = stable_unit_density_deriv(beta, x).value;
    return -(t / beta) * std::pow(s, -2.0 - 1.0 / beta) *
           ((1.0 + 1.0 / beta) * g + (x / beta) * gp);
  }
  return stable_power_series(beta, s, t, 2, 500);
}

double relativistic_inverse_density(double beta, double m, double s, double t, int max_terms) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("relativistic_inverse_density: beta must lie in (0,1)");
  if (!(m > 0.0)) throw std::invalid_argument("relativistic_inverse_density: m must be positive");
  if (!(s >= 0.0)) throw std::invalid_argument("relativistic_inverse_density: s must be nonnegative");
  if (!(t > 0.0)) throw std::invalid_argument("relativistic_inverse_density: t must be positive");
  const double mb = std::pow(m, beta);
  if (s * mb > 30.0) {
    throw std::invalid_argument(
        "relativistic_inverse_density: s*m^beta > 30 is outside the series window; "
        "use the Fourier route");
  }
  if (s == 0.0) return beta * mb * rgamma(1.0 - beta) * upper_gamma(-beta, m * t);

  SeriesGuard acc;
  const double x = m * t;
  double pref = mb;  // (-1)^k s^k m^{beta(k+1)} / k!
  int quiet = 0;
  bool converged = false;
  for (int k = 0; k <= max_terms; ++k) {
    double u1 = beta * (k + 1);
    double sp1 = boost::math::sin_pi(u1);
    double a = 0.0;
    if (sp1 != 0.0) a = std::tgamma(1.0 + u1) * upper_gamma(-u1, x) * sp1;
    double b = 0.0;
    if (k > 0) {
      double u0 = beta * k;
      double sp0 = boost::math::sin_pi(u0);
      if (sp0 != 0.0) b = std::tgamma(1.0 + u0) * upper_gamma(-u0, x) * sp0;
    }
    double term = pref * (a - b);
    if (!std::isfinite(term)) {
      throw SeriesDivergence("relativistic_inverse_density: terms overflow before converging",
                             acc.min_idx < 0 ? k : acc.min_idx);
    }
    acc.add(term, k);
    if (std::abs(term) < 1e-17 * std::max(std::abs(acc.sum.value()), 1e-300)) {
      if (++quiet >= 2) {
        converged = true;
        break;
      }
    } else {
      quiet = 0;
    }
    pref *= -s * mb / double(k + 1);
  }
  if (!converged) {
    throw SeriesDivergence("relativistic_inverse_density: series truncated before converging",
                           acc.min_idx);
  }
  acc.check("relativistic_inverse_density");
  return std::exp(mb * s) / kPi * acc.sum.value();
}

// ---------------------------------------------------------------------------
// Fourier route

struct FourierEngine::Bundle {
  double s = 0.0;
  double xi_end = 0.0;
  std::unique_ptr<FilonPanels> val, dpt, dps;
};

FourierEngine::FourierEngine(BernsteinModel model)
    : FourierEngine(std::move(model), Options{}) {}

FourierEngine::FourierEngine(BernsteinModel model, Options opt)
    : model_(std::move(model)), opt_(opt), orey_(model_.orey_lower_bound()) {}

std::shared_ptr<FourierEngine> FourierEngine::shared(const BernsteinModel& model) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<FourierEngine>> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto& slot = cache[model.id()];
  if (!slot) slot = std::make_shared<FourierEngine>(model);
  return slot;
}

std::shared_ptr<const FourierEngine::Bundle> FourierEngine::bundle(double s) const {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw std::domain_error("FourierEngine: operational time s must be positive and finite");
  }
  {
    std::lock_guard<std::mutex> lk(mu_);
    auto it = bundles_.find(s);
    if (it != bundles_.end()) return it->second;
  }
  // cutoff estimate from the Re psi envelope, then confirmed pointwise
  const double target = -std::log(opt_.abs_floor);
  double xi = 0.0;
  if (orey_.c > 0.0 && orey_.q > 0.0) xi = std::pow(target / (s * orey_.c), 1.0 / orey_.q);
  if (orey_.xi_min > 0.0) xi = std::max(xi, 2.0 * orey_.xi_min);
  if (!(xi > 0.0) || !std::isfinite(xi)) xi = 1.0;
  for (int i = 0; i < 200 && std::exp(-s * model_.psi(xi).real()) > opt_.abs_floor; ++i) {
    xi *= 2.0;
  }

  auto b = std::make_shared<Bundle>();
  b->s = s;
  b->xi_end = xi;
  FilonPanels::Options fo;
  fo.variation_budget = opt_.variation_budget;
  auto env = [this, s](double x) -> std::complex<double> {
    std::complex<double> p = model_.psi(x);
    return std::exp(std::complex<double>(-s * p.real(), -s * p.imag()));
  };
  b->val = std::make_unique<FilonPanels>(env, xi, fo);
  b->dpt = std::make_unique<FilonPanels>(
      [&env](double x) { return std::complex<double>(0.0, -x) * env(x); }, xi, fo);
  b->dps = std::make_unique<FilonPanels>(
      [this, &env](double x) { return -model_.psi(x) * env(x); }, xi, fo);

  std::lock_guard<std::mutex> lk(mu_);
  auto& slot = bundles_[s];
  if (!slot) slot = std::move(b);
  return slot;
}

double FourierEngine::g(double t, double s) const {
  if (t < 0.0) return 0.0;
  return bundle(s)->val->transform(t).real() / kPi;
}

double FourierEngine::g_dt(double t, double s) const {
  if (t < 0.0) return 0.0;
  return bundle(s)->dpt->transform(t).real() / kPi;
}

double FourierEngine::g_ds(double t, double s) const {
  if (t < 0.0) return 0.0;
  return bundle(s)->dps->transform(t).real() / kPi;
}

std::shared_ptr<const FourierEngine::Row> FourierEngine::row(double s, double t_max) const {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) {
    throw std::domain_error("FourierEngine::row: t_max must be positive and finite");
  }
  double b_end = std::exp2(std::ceil(std::log2(t_max)));
  std::pair<double, double> key{s, b_end};
  {
    // any cached row for this s reaching at least as far will do
    std::lock_guard<std::mutex> lk(mu_);
    auto it = rows_.lower_bound(key);
    if (it != rows_.end() && it->first.first == s && it->first.second >= b_end) {
      return it->second;
    }
  }
  auto bn = bundle(s);

  auto r = std::make_shared<Row>();
  r->s = s;
  double u0 = model_.body_scale(s);
  double u_min = std::min(u0 * opt_.u_min_factor, b_end * 1e-3);
  double decades = std::log10(b_end / u_min);
  std::size_t n = std::clamp<std::size_t>(std::size_t(decades * opt_.pts_per_decade) + 2, 16, 3000);
  r->t = log_grid(u_min, b_end, n);
  r->g.resize(n);
  r->g_dt.resize(n);
  r->g_ds.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double tt = r->t[i];
    r->g[i] = bn->val->transform(tt).real() / kPi;
    r->g_dt[i] = bn->dpt->transform(tt).real() / kPi;
    r->g_ds[i] = bn->dps->transform(tt).real() / kPi;
  }

  // product integration of the tail kernel against piecewise-linear g rows;
  // the singular factor is handled exactly through closed-form moments
  r->f.resize(n);
  r->f_dt.resize(n);
  r->f_ds.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double tk = r->t[k];
    KahanSum sf, sdt, sds;
    for (std::size_t j = 0; j <= k; ++j) {
      double ua = (j == 0) ? 0.0 : r->t[j - 1];
      double ub = r->t[j];
      double ga = (j == 0) ? 0.0 : r->g[j - 1];
      double lo = std::max(tk - ub, 0.0);
      double hi = tk - ua;
      if (!(hi > lo)) continue;
      double m0 = model_.tail_mass(lo, hi);
      double m1 = model_.tail_first_moment(lo, hi);
      double inv_h = 1.0 / (ub - ua);
      auto add = [&](KahanSum& acc, double va, double vb) {
        double slope = (vb - va) * inv_h;
        double alpha = va - slope * ua;
        acc.add((alpha + slope * tk) * m0 - slope * m1);
      };
      add(sf, ga, r->g[j]);
      add(sdt, (j == 0) ? 0.0 : r->g_dt[j - 1], r->g_dt[j]);
      add(sds, (j == 0) ? 0.0 : r->g_ds[j - 1], r->g_ds[j]);
    }
    r->f[k] = sf.value();
    r->f_dt[k] = sdt.value();
    r->f_ds[k] = sds.value();
  }

  std::lock_guard<std::mutex> lk(mu_);
  auto& slot = rows_[key];
  if (!slot) slot = std::move(r);
  return slot;
}

void FourierEngine::conv_all(const Row& row, double t, double out[3]) const {
  out[0] = out[1] = out[2] = 0.0;
  if (!(t > 0.0)) return;
  auto bn = bundle(row.s);
  std::size_t idx = std::upper_bound(row.t.begin(), row.t.end(), t) - row.t.begin();
  // idx = number of nodes <= ... first node > t; panels run over nodes [0, idx)
  KahanSum acc[3];
  auto add_panel = [&](double ua, double ub, const double ga[3], const double gb[3]) {
    double lo = std::max(t - ub, 0.0);
    double hi = t - ua;
    if (!(hi > lo)) return;
    double m0 = model_.tail_mass(lo, hi);
    double m1 = model_.tail_first_moment(lo, hi);
    double inv_h = 1.0 / (ub - ua);
    for (int c = 0; c < 3; ++c) {
      double slope = (gb[c] - ga[c]) * inv_h;
      double alpha = ga[c] - slope * ua;
      acc[c].add((alpha + slope * t) * m0 - slope * m1);
    }
  };
  double prev_u = 0.0;
  double prev_g[3] = {0.0, 0.0, 0.0};
  for (std::size_t j = 0; j < idx; ++j) {
    double cur_g[3] = {row.g[j], row.g_dt[j], row.g_ds[j]};
    add_panel(prev_u, row.t[j], prev_g, cur_g);
    prev_u = row.t[j];
    prev_g[0] = cur_g[0];
    prev_g[1] = cur_g[1];
    prev_g[2] = cur_g[2];
  }
  if (t > prev_u) {
    double end_g[3] = {bn->val->transform(t).real() / kPi, bn->dpt->transform(t).real() / kPi,
                       bn->dps->transform(t).real() / kPi};
    add_panel(prev_u, t, prev_g, end_g);
  }
  out[0] = acc[0].value();
  out[1] = acc[1].value();
  out[2] = acc[2].value();
}

void FourierEngine::inverse_all(double s, double t, double out[3]) const {
  auto r = row(s, std::max(t, 1e-300));
  conv_all(*r, t, out);
}

double FourierEngine::inverse_density(double s, double t) const {
  double out[3];
  inverse_all(s, t, out);
  return out[0];
}

double FourierEngine::inverse_density_dt(double s, double t) const {
  double out[3];
  inverse_all(s, t, out);
  return out[1];
}

double FourierEngine::inverse_density_ds(double s, double t) const {
  double out[3];
  inverse_all(s, t, out);
  return out[2];
}

// ---------------------------------------------------------------------------
// routed evaluations

double inverse_density(const BernsteinModel& model, double s, double t) {
  if (model.is_stable()) return inverse_density_stable(model.as_stable()->beta, s, t);
  if (model.is_relativistic()) {
    const auto* k = model.as_relativistic();
    if (s * std::pow(k->m, k->beta) <= 30.0) {
      try {
        return relativistic_inverse_density(k->beta, k->m, s, t);
      } catch (const SeriesDivergence&) {
        // fall through to the Fourier route
      }
    }
  }
  return FourierEngine::shared(model)->inverse_density(s, t);
}

double inverse_density_dt(const BernsteinModel& model, double s, double t) {
  if (model.is_stable()) return inverse_density_stable_dt(model.as_stable()->beta, s, t);
  return FourierEngine::shared(model)->inverse_density_dt(s, t);
}

double inverse_density_ds(const BernsteinModel& model, double s, double t) {
  if (model.is_stable()) return inverse_density_stable_ds(model.as_stable()->beta, s, t);
  return FourierEngine::shared(model)->inverse_density_ds(s, t);
}

double subordinator_density(const BernsteinModel& model, double t, double s) {
  return FourierEngine::shared(model)->g(t, s);
}

LaplacePair laplace_oracle_fL(const FourierEngine& engine, double s, double lambda,
                              double t_max) {
  if (!(lambda > 0.0)) throw std::invalid_argument("laplace_oracle_fL: lambda must be positive");
  auto r = engine.row(s, t_max);
  KahanSum acc;
  auto weight = [&](double t, double f) { return std::exp(-lambda * t) * f; };
  // leading triangle from (0, 0) to the first node
  acc.add(0.5 * r->t[0] * weight(r->t[0], r->f[0]));
  double prev_t = r->t[0];
  double prev_v = weight(prev_t, r->f[0]);
  for (std::size_t i = 1; i < r->t.size() && r->t[i] <= t_max; ++i) {
    double v = weight(r->t[i], r->f[i]);
    acc.add(0.5 * (prev_v + v) * (r->t[i] - prev_t));
    prev_t = r->t[i];
    prev_v = v;
  }
  if (prev_t < t_max) {
    double f_end = engine.inverse_density(s, t_max);
    acc.add(0.5 * (prev_v + weight(t_max, f_end)) * (t_max - prev_t));
  }
  double phi = engine.model().phi(lambda);
  return {acc.value(), phi / lambda * std::exp(-s * phi)};
}

double governing_residual_fL(const FourierEngine& engine, double s, double t_max,
                             std::size_t steps) {
  if (steps < 4) throw std::invalid_argument("governing_residual_fL: steps must be >= 4");
  double dt = t_max / double(steps);
  std::vector<double> f(steps + 1, 0.0), f_ds(steps + 1, 0.0);
  for (std::size_t k = 1; k <= steps; ++k) {
    double out[3];
    engine.inverse_all(s, dt * double(k), out);
    f[k] = out[0];
    f_ds[k] = out[2];
  }
  auto w = memory_weights(engine.model(), dt, steps);
  TimeGridFunction F{0.0, dt, f};
  double scale = 0.0;
  for (double v : f_ds) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) scale = 1.0;
  // the density at fixed s rises from zero non-smoothly, so the first tenth
  // of the horizon stays out of the max (but inside the history sum)
  std::size_t k_lo = std::max<std::size_t>(1, steps / 10);
  double worst = 0.0;
  for (std::size_t k = k_lo; k <= steps; ++k) {
    double resid = apply_nonlocal_derivative(w, F, k) + f_ds[k];
    worst = std::max(worst, std::abs(resid));
  }
  return worst / scale;
}

// ---------------------------------------------------------------------------
// tables

const char* provenance_name(DensityProvenance p) {
  switch (p) {
    case DensityProvenance::FourierConvolution: return "fourier";
    case DensityProvenance::StableSeries: return "stable-series";
    case DensityProvenance::RelativisticSeries: return "relativistic-series";
  }
  return "unknown";
}

std::vector<double> default_s_grid(const BernsteinModel& model, double t_min, double t_max,
                                   std::size_t n) {
  if (!(t_min > 0.0) || !(t_max >= t_min)) {
    throw std::invalid_argument("default_s_grid: need 0 < t_min <= t_max");
  }
  double s_lo = 1e-3 / model.phi(1.0 / t_min);
  double s_hi = 12.0 / model.phi(1.0 / t_max);
  return log_grid(s_lo, s_hi, n);
}

DensityTable build_density_table(const BernsteinModel& model, std::vector<double> s_grid,
                                 std::vector<double> t_grid, DensityProvenance route,
                                 bool with_derivatives) {
  if (s_grid.empty() || t_grid.empty()) {
    throw std::invalid_argument("build_density_table: grids must be nonempty");
  }
  if (!std::is_sorted(s_grid.begin(), s_grid.end()) ||
      !std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw std::invalid_argument("build_density_table: grids must be sorted ascending");
  }
  DensityTable tab;
  tab.s = std::move(s_grid);
  tab.t = std::move(t_grid);
  tab.provenance = route;
  tab.model_id = model.id();
  const std::size_t ns = tab.s.size(), nt = tab.t.size();
  tab.f.assign(ns * nt, 0.0);
  if (with_derivatives) {
    tab.df_ds.assign(ns * nt, 0.0);
    tab.df_dt.assign(ns * nt, 0.0);
  }

  switch (route) {
    case DensityProvenance::StableSeries: {
      if (!model.is_stable()) {
        throw std::invalid_argument("build_density_table: stable-series route needs a stable model");
      }
      double beta = model.as_stable()->beta;
      for (std::size_t is = 0; is < ns; ++is) {
        for (std::size_t it = 0; it < nt; ++it) {
          std::size_t q = is * nt + it;
          try {
            tab.f[q] = inverse_density_stable(beta, tab.s[is], tab.t[it]);
            if (with_derivatives) {
              tab.df_dt[q] = inverse_density_stable_dt(beta, tab.s[is], tab.t[it]);
              tab.df_ds[q] = inverse_density_stable_ds(beta, tab.s[is], tab.t[it]);
            }
          } catch (const SeriesDivergence&) {
            // below the cancellation floor the true value is zero to all
            // certifiable digits
          }
        }
      }
      break;
    }
    case DensityProvenance::RelativisticSeries: {
      if (!model.is_relativistic()) {
        throw std::invalid_argument(
            "build_density_table: relativistic-series route needs a relativistic model");
      }
      const auto* k = model.as_relativistic();
      auto eval = [&](double s, double t) {
        return relativistic_inverse_density(k->beta, k->m, s, t);
      };
      for (std::size_t is = 0; is < ns; ++is) {
        for (std::size_t it = 0; it < nt; ++it) {
          std::size_t q = is * nt + it;
          double s = tab.s[is], t = tab.t[it];
          try {
            tab.f[q] = eval(s, t);
            if (with_derivatives) {
              double hs = std::max(1e-8, 6e-6 * s);
              double ht = 6e-6 * t;
              tab.df_dt[q] = (eval(s, t + ht) - eval(s, t - ht)) / (2.0 * ht);
              tab.df_ds[q] = (s > hs) ? (eval(s + hs, t) - eval(s - hs, t)) / (2.0 * hs)
                                      : (eval(s + hs, t) - tab.f[q]) / hs;
            }
          } catch (const SeriesDivergence&) {
          }
        }
      }
      break;
    }
    case DensityProvenance::FourierConvolution: {
      auto engine = FourierEngine::shared(model);
      for (std::size_t is = 0; is < ns; ++is) {
        engine->row(tab.s[is], tab.t.back());  // warm one shared row per s
        for (std::size_t it = 0; it < nt; ++it) {
          double out[3];
          engine->inverse_all(tab.s[is], tab.t[it], out);
          std::size_t q = is * nt + it;
          tab.f[q] = out[0];
          if (with_derivatives) {
            tab.df_dt[q] = out[1];
            tab.df_ds[q] = out[2];
          }
        }
      }
      break;
    }
  }
  return tab;
}

std::vector<ValidationIssue> DensityTable::validate(const BernsteinModel& model) const {
  std::vector<ValidationIssue> issues;
  const std::size_t ns = s.size(), nt = t.size();
  if (f.size() != ns * nt) {
    issues.push_back({"table shape mismatch: f has " + std::to_string(f.size()) +
                      " entries, expected " + std::to_string(ns * nt)});
    return issues;
  }
  double fmax = 0.0, fmin = 0.0;
  for (double v : f) {
    fmax = std::max(fmax, v);
    fmin = std::min(fmin, v);
  }
  if (fmin < -1e-10 * std::max(fmax, 1.0)) {
    issues.push_back({"negative density values below the clamp floor: min = " +
                      std::to_string(fmin)});
  }
  // per-t normalization over s by trapezoid on the clamped values
  if (ns >= 2) {
    std::size_t bad = 0;
    double worst = 1.0;
    for (std::size_t it = 0; it < nt; ++it) {
      KahanSum acc;
      for (std::size_t is = 0; is + 1 < ns; ++is) {
        acc.add(0.5 * (value(is, it) + value(is + 1, it)) * (s[is + 1] - s[is]));
      }
      double norm = acc.value() + s.front() * value(0, it);  // head rectangle to s = 0
      if (norm < 0.99 || norm > 1.001) {
        ++bad;
        if (std::abs(norm - 1.0) > std::abs(worst - 1.0)) worst = norm;
      }
    }
    if (bad > 0) {
      issues.push_back({"s-normalization off for " + std::to_string(bad) + "/" +
                        std::to_string(nt) + " t rows; worst = " + std::to_string(worst)});
    }
  }
  // the small-s limit of the density is the tail of the Levy measure
  {
    std::size_t bad = 0;
    double worst = 0.0;
    for (std::size_t it = 0; it < nt; ++it) {
      double ref = model.levy_tail(t[it]);
      double dev = std::abs(value(0, it) - ref) / ref;
      if (dev > 0.02) {
        ++bad;
        worst = std::max(worst, dev);
      }
    }
    if (bad > 0) {
      issues.push_back({"first s-column deviates from the tail function for " +
                        std::to_string(bad) + "/" + std::to_string(nt) +
                        " t rows; worst rel dev = " + std::to_string(worst)});
    }
  }
  return issues;
}

}  // namespace subdiff
