#include "subdiff/msd.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "subdiff/densities.hpp"
#include "subdiff/fourier.hpp"
#include "subdiff/special.hpp"

namespace subdiff {

namespace {
constexpr double kPiMsd = 3.14159265358979323846;
}

// shared s-quadrature state for u_phi(t) = int_0^inf g(t,s) ds: one composite
// log grid of s nodes whose Fourier bundles are built once and reused for
// every t in [t_lo, t_max]
struct Potential::Quad {
  std::shared_ptr<FourierEngine> engine;
  std::vector<double> s;
  bool finite_mean_ = false;
  double d1_ = 0.0, d2_ = 0.0;  // Phi'(0+) and -Phi''(0+) when the mean is finite

  Quad(const BernsteinModel& model, double t_lo, double t_max)
      : engine(FourierEngine::shared(model)) {
    double lo = 1e-3 / model.phi(1.0 / t_lo);
    double hi = 40.0 / model.phi(1.0 / t_max);
    if (!(lo > 0.0) || !(hi > lo)) {
      throw std::invalid_argument("potential quadrature: degenerate s range");
    }
    double decades = std::log10(hi / lo);
    std::size_t n = std::max<std::size_t>(std::size_t(decades * 24.0) + 2, 16);
    s = log_grid(lo, hi, n);
    // finite-mean detection: Phi(lambda)/lambda settles to Phi'(0+)
    double r1 = model.phi(1e-6) / 1e-6, r2 = model.phi(2e-6) / 2e-6;
    if (std::isfinite(r1) && r1 > 0.0 && std::fabs(r2 / r1 - 1.0) < 0.01) {
      double h = 1e-5;
      double d2 = 2.0 * (r1 * h - model.phi(h)) / (h * h);
      if (std::isfinite(d2) && d2 > 0.0) {
        finite_mean_ = true;
        d1_ = r1;
        d2_ = d2;
      }
    }
  }

  // Simpson in x = ln s over the window [1e-3, 40] / phi(1/t) (the composite
  // grid is uniform in x, integrand g(t, e^x) e^x), plus the triangle head
  // from (0, 0); g vanishes linearly at s = 0 for fixed t > 0
  double density(const BernsteinModel& model, double t) const {
    if (finite_mean_) {
      // relative width of g(t, .) around its mean s* = t / Phi'(0+)
      double delta = std::sqrt(d2_ / (d1_ * t));
      if (delta < 0.3) return density_concentrated(model, t, delta);
    }
    double scale = model.phi(1.0 / t);
    double s_lo = 1e-3 / scale, s_hi = 40.0 / scale;
    std::vector<double> xs, fs;
    for (double sk : s) {
      if (sk < s_lo || sk > s_hi) continue;
      xs.push_back(std::log(sk));
      fs.push_back(std::max(engine->g(t, sk), 0.0) * sk);
    }
    if (xs.size() < 2) throw std::logic_error("potential quadrature: window misses the grid");
    KahanSum acc;
    acc.add(0.5 * fs.front());  // head triangle: int_0^{s_lo} g ds ~ s_lo g(s_lo) / 2
    std::size_t i = 1;
    for (; i + 1 < xs.size(); i += 2) {
      double h = 0.5 * (xs[i + 1] - xs[i - 1]);
      acc.add(h / 3.0 * (fs[i - 1] + 4.0 * fs[i] + fs[i + 1]));
    }
    if (i < xs.size()) {  // odd remainder: one trapezoid panel at the far tail
      acc.add(0.5 * (fs[i] + fs[i - 1]) * (xs[i] - xs[i - 1]));
    }
    return acc.value();
  }

  // Finite-mean models at large t: g(t, .) is nearly Gaussian with relative
  // width delta and falls between the composite grid nodes. Integrate on a
  // local log window of +-8 sd around the mean with fresh panels per node so
  // the engine cache is not flooded with one-shot bundles.
  double density_concentrated(const BernsteinModel& model, double t, double delta) const {
    double ls0 = std::log(t / d1_);
    double half = 8.0 * delta;
    const std::size_t n = 81;  // odd: uniform Simpson
    double h = 2.0 * half / double(n - 1);
    std::vector<double> fs(n);
    for (std::size_t i = 0; i < n; ++i) {
      double sk = std::exp(ls0 - half + h * double(i));
      // cutoff where the envelope magnitude reaches the floor
      double xi = std::sqrt(2.0 * 27.6 / (sk * d2_)) * 1e-3;
      while (sk * model.psi(xi).real() < 27.6 && xi < 1e300) xi *= 2.0;
      double lo = xi / 2.0, hi = xi;
      for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (sk * model.psi(mid).real() < 27.6 ? lo : hi) = mid;
      }
      auto env = [&model, sk](double x) { return std::exp(-sk * model.psi(x)); };
      FilonPanels panels(env, hi);
      fs[i] = std::max(panels.transform(t).real() / kPiMsd, 0.0) * sk;
    }
    KahanSum acc;
    for (std::size_t i = 1; i + 1 < n; i += 2) {
      acc.add(h / 3.0 * (fs[i - 1] + 4.0 * fs[i] + fs[i + 1]));
    }
    return acc.value();
  }
};

Potential::Potential(const BernsteinModel& model, double t_max) : model_(model), t_max_(t_max) {
  if (!(t_max > 0.0)) throw std::invalid_argument("Potential: t_max must be positive");
  if (const auto* st = model.as_stable()) {
    closed_form_ = true;
    beta_ = st->beta;
    return;
  }
  double t_lo = 1e-6 * t_max;
  quad_ = std::make_shared<Quad>(model, t_lo, t_max);
  auto tg = log_grid(t_lo, t_max, std::max<std::size_t>(std::size_t(std::log10(t_max / t_lo) * 30.0) + 2, 16));
  lt_.reserve(tg.size());
  dens_.reserve(tg.size());
  for (double t : tg) {
    lt_.push_back(std::log(t));
    dens_.push_back(std::max(quad_->density(model, t), 1e-300));
  }
  // local power of u_phi near the first node fixes the head of U
  double p = (std::log(dens_[1]) - std::log(dens_[0])) / (lt_[1] - lt_[0]);
  head_gamma_ = std::clamp(1.0 + p, 0.05, 2.0);
  cum_.resize(tg.size());
  cum_[0] = tg[0] * dens_[0] / head_gamma_;
  for (std::size_t i = 1; i < tg.size(); ++i) {
    cum_[i] = cum_[i - 1] + 0.5 * (dens_[i] + dens_[i - 1]) * (tg[i] - tg[i - 1]);
  }
}

double Potential::density_quadrature(double t) const { return quad_->density(model_, t); }

double Potential::density(double t) const {
  if (!(t > 0.0)) throw std::domain_error("Potential::density: t must be positive");
  if (closed_form_) return std::pow(t, beta_ - 1.0) * rgamma(beta_);
  if (t > t_max_ * (1.0 + 1e-9)) throw std::out_of_range("Potential::density: beyond t_max");
  double lt = std::log(t);
  if (lt <= lt_.front()) {
    double p = (std::log(dens_[1]) - std::log(dens_[0])) / (lt_[1] - lt_[0]);
    return dens_.front() * std::exp(p * (lt - lt_.front()));
  }
  auto it = std::lower_bound(lt_.begin(), lt_.end(), lt);
  std::size_t i = std::min<std::size_t>(it - lt_.begin(), lt_.size() - 1);
  if (i == 0) return dens_[0];
  double f = (lt - lt_[i - 1]) / (lt_[i] - lt_[i - 1]);
  return std::exp(std::log(dens_[i - 1]) + f * (std::log(dens_[i]) - std::log(dens_[i - 1])));
}

double Potential::value(double t) const {
  if (t < 0.0) throw std::domain_error("Potential::value: t must be nonnegative");
  if (t == 0.0) return 0.0;
  if (closed_form_) return std::pow(t, beta_) * rgamma(1.0 + beta_);
  if (t > t_max_ * (1.0 + 1e-9)) throw std::out_of_range("Potential::value: beyond t_max");
  double lt = std::log(t);
  if (lt <= lt_.front()) return cum_.front() * std::pow(t / std::exp(lt_.front()), head_gamma_);
  auto it = std::lower_bound(lt_.begin(), lt_.end(), lt);
  std::size_t i = std::min<std::size_t>(it - lt_.begin(), lt_.size() - 1);
  if (i == 0) return cum_[0];
  double ta = std::exp(lt_[i - 1]), tb = std::exp(lt_[i]);
  double f = (t - ta) / (tb - ta);
  return cum_[i - 1] + f * (cum_[i] - cum_[i - 1]);
}

double potential_density(const BernsteinModel& model, double t) {
  return Potential(model, t).density(t);
}

double potential(const BernsteinModel& model, double t) { return Potential(model, t).value(t); }

PotentialTable potential_table(const BernsteinModel& model, const std::vector<double>& t_grid) {
  if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()) || !(t_grid.front() > 0.0)) {
    throw std::invalid_argument("potential_table: t grid must be positive ascending");
  }
  Potential pot(model, t_grid.back());
  PotentialTable tab;
  tab.t = t_grid;
  for (double t : t_grid) {
    tab.u_phi.push_back(pot.density(t));
    tab.U.push_back(pot.value(t));
  }
  return tab;
}

LaplacePair laplace_oracle_potential(const Potential& pot, double lambda, double t_max) {
  if (!(lambda > 0.0) || !(t_max > 0.0) || t_max > pot.t_max() * (1.0 + 1e-9)) {
    throw std::invalid_argument("laplace_oracle_potential: need lambda > 0, t_max <= pot range");
  }
  auto tg = log_grid(1e-6 * t_max, t_max, 600);
  KahanSum acc;
  acc.add(pot.value(tg.front()));  // exp(-lambda t) ~ 1 on the head
  double prev_t = tg.front(), prev_v = std::exp(-lambda * prev_t) * pot.density(prev_t);
  for (std::size_t i = 1; i < tg.size(); ++i) {
    double v = std::exp(-lambda * tg[i]) * pot.density(tg[i]);
    acc.add(0.5 * (v + prev_v) * (tg[i] - prev_t));
    prev_t = tg[i];
    prev_v = v;
  }
  return {acc.value(), 1.0 / pot.model().phi(lambda)};
}

LaplacePair laplace_oracle_potential(const BernsteinModel& model, double lambda, double t_max) {
  Potential pot(model, t_max);
  return laplace_oracle_potential(pot, lambda, t_max);
}

double potential_renewal_check(const Potential& pot, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("potential_renewal_check: t must be positive");
  const auto& model = pot.model();
  // int_0^t u_phi(s) levy_tail(t-s) ds, split at t/2; both factors have an
  // integrable edge and the heads are integrated in closed form
  KahanSum acc;
  {
    auto sg = log_grid(1e-8 * t, 0.5 * t, 400);
    acc.add(pot.value(sg.front()) * model.levy_tail(t));  // head: tail ~ const
    double ps = sg.front(), pv = pot.density(ps) * model.levy_tail(t - ps);
    for (std::size_t i = 1; i < sg.size(); ++i) {
      double v = pot.density(sg[i]) * model.levy_tail(t - sg[i]);
      acc.add(0.5 * (v + pv) * (sg[i] - ps));
      ps = sg[i];
      pv = v;
    }
  }
  {
    auto tg = log_grid(1e-8 * t, 0.5 * t, 400);  // tau = t - s
    acc.add(model.tail_integral(tg.front()) * pot.density(t));
    double ps = tg.front(), pv = model.levy_tail(ps) * pot.density(t - ps);
    for (std::size_t i = 1; i < tg.size(); ++i) {
      double v = model.levy_tail(tg[i]) * pot.density(t - tg[i]);
      acc.add(0.5 * (v + pv) * (tg[i] - ps));
      ps = tg[i];
      pv = v;
    }
  }
  return acc.value();
}

double msd_formula(const Potential& pot, const Boundary& boundary, const CrossingLaw& law,
                   double t) {
  if (!law.boundary_id.empty() && law.boundary_id != boundary.name()) {
    throw std::invalid_argument("msd_formula: crossing law was generated for boundary '" +
                                law.boundary_id + "', not '" + boundary.name() + "'");
  }
  if (law.start != 0.0) {
    throw std::invalid_argument("msd_formula: crossing law must start at y = 0");
  }
  if (!(t > 0.0) || t > law.horizon * (1.0 + 1e-9)) {
    throw std::invalid_argument("msd_formula: t outside the crossing-law horizon");
  }
  KahanSum killed;
  for (double w : law.w) {
    if (w > t) break;
    double phi_w = boundary.eval(w);
    killed.add(phi_w * phi_w + pot.value(t - w));
  }
  return pot.value(t) - killed.value() / double(law.n_paths);
}

double msd_formula(const BernsteinModel& model, const Boundary& boundary, const CrossingLaw& law,
                   double t) {
  Potential pot(model, std::max(t, law.horizon));
  return msd_formula(pot, boundary, law, t);
}

std::pair<double, double> asymptotic_bounds(double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0) {
    throw std::invalid_argument("asymptotic_bounds: gamma must lie in (0, 1]");
  }
  double g = rgamma(1.0 + gamma);
  return {gamma / (1.0 + gamma) * g, g};
}

ScalingReport scaling_verdict(const BernsteinModel& model, const Boundary* boundary,
                              const MsdEstimate& series) {
  ScalingReport rep;
  rep.gamma = model.regular_variation_index();
  auto [lo, hi] = asymptotic_bounds(std::min(rep.gamma, 1.0));
  rep.lower = lo;
  rep.upper = hi;
  std::ostringstream os;
  if (series.t.size() < 3 || series.t.back() < 10.0 * series.t.front() * (1.0 - 1e-9)) {
    rep.conclusive = false;
    os << "inconclusive: need at least a decade of t with 3+ nodes";
    rep.summary = os.str();
    return rep;
  }
  rep.t_hi = series.t.back();
  rep.t_lo = rep.t_hi / 10.0;
  std::vector<double> lx, ly;
  double max_rel_se = 0.0;
  for (std::size_t i = 0; i < series.t.size(); ++i) {
    if (series.t[i] < rep.t_lo * (1.0 - 1e-9)) continue;
    double m = series.msd[i];
    if (!(m > 0.0)) {
      rep.conclusive = false;
      rep.summary = "inconclusive: nonpositive msd value in the checked window";
      return rep;
    }
    rep.t.push_back(series.t[i]);
    rep.ratio.push_back(model.phi(1.0 / series.t[i]) * m);
    lx.push_back(std::log(series.t[i]));
    ly.push_back(std::log(m));
    if (i < series.se.size() && series.se[i] > 0.0) {
      max_rel_se = std::max(max_rel_se, series.se[i] / m);
    }
  }
  if (rep.t.size() < 3) {
    rep.conclusive = false;
    rep.summary = "inconclusive: fewer than 3 nodes in the last decade";
    return rep;
  }
  rep.conclusive = true;
  rep.slack = max_rel_se + 0.10;
  rep.slope = fit_line(lx, ly).slope;
  double band_lo = rep.lower * (1.0 - rep.slack), band_hi = rep.upper * (1.0 + rep.slack);
  auto [mn, mx] = std::minmax_element(rep.ratio.begin(), rep.ratio.end());
  rep.band_pass = (*mn >= band_lo) && (*mx <= band_hi);
  os.precision(6);
  os << (boundary ? "killed" : "free") << " msd over t in [" << rep.t_lo << ", " << rep.t_hi
     << "]: phi(1/t)*msd in [" << *mn << ", " << *mx << "], band [" << band_lo << ", " << band_hi
     << "] (constants " << rep.lower << ", " << rep.upper << ", slack " << rep.slack << ") -> "
     << (rep.band_pass ? "PASS" : "FAIL") << "; log-log slope " << rep.slope
     << " (regular variation index " << rep.gamma << ")";
  rep.summary = os.str();
  return rep;
}

}  // namespace subdiff
