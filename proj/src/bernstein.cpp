#include "subdiff/bernstein.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "subdiff/fourier.hpp"
#include "subdiff/quad.hpp"
#include "subdiff/special.hpp"
#include "subdiff/spline.hpp"

namespace subdiff {

namespace {

constexpr double kPi = std::numbers::pi;
const std::complex<double> kI(0.0, 1.0);

double nudge_exponent(double p) {
  // Keeps p, p+1, p+2 away from zero so every antiderivative below stays in
  // its generic power-law branch; the perturbation is far below all model
  // tolerances.
  for (int k = 0; k <= 2; ++k) {
    if (std::fabs(p + k) < 1e-8) return p + 2e-8;
  }
  return p;
}

std::string format_id(const char* fmt, double a, double b = 0.0, bool two = false) {
  char buf[128];
  if (two)
    std::snprintf(buf, sizeof buf, fmt, a, b);
  else
    std::snprintf(buf, sizeof buf, fmt, a);
  return buf;
}

}  // namespace

// Precomputed closed-form data for the tabulated kind. The Levy density is a
// power law on every segment, so the tail, its running integral and first
// moment all have exact antiderivatives; psi is precomputed on a log grid of
// xi by oscillatory quadrature of the tail transform
//   psi(xi) = -i xi * int_0^inf levy_tail(s) e^{i xi s} ds
// and then interpolated.
struct TabAux {
  std::vector<double> s, nu, p;     // knots, density values, segment exponents
  double p0 = 0, pI = 0;            // head/tail continuation exponents
  double q0 = 0, qI = 0;            // p + 1
  double headA = 0, headC = 0;      // levy_tail(s) = headA + headC s^q0, s <= s0
  double tailC = 0;                 // levy_tail(s) = tailC s^qI, s >= sN
  std::vector<double> segA, segD;   // levy_tail(s) = segA + segD s^{q} on segment
  std::vector<double> nubar;        // levy_tail at knots
  std::vector<double> cumI, cumM;   // int_0^{s_i} levy_tail, int_0^{s_i} s levy_tail
  double drift = 0;                 // int_0^inf levy_tail (inf if heavy tail)

  std::vector<FilonPanels> seg_panels;  // envelope bundles per segment
  CubicSpline lre, lim;                 // ln Re psi, ln(-Im psi) vs ln xi
  double lxi_lo = 0, lxi_hi = 0;
  double sl_re_lo = 0, sl_re_hi = 0, sl_im_lo = 0, sl_im_hi = 0;

  double nubar_at(double x) const {
    if (x <= s.front()) return headA + headC * std::pow(x, q0);
    if (x >= s.back()) return tailC * std::pow(x, qI);
    std::size_t i = seg_index(x);
    return segA[i] + segD[i] * std::pow(x, p[i] + 1.0);
  }

  std::size_t seg_index(double x) const {
    std::size_t i = std::upper_bound(s.begin(), s.end(), x) - s.begin();
    if (i == 0) return 0;
    if (i >= s.size()) return s.size() - 2;
    return i - 1;
  }

  // int_0^t levy_tail and int_0^t s levy_tail, exact per segment
  double tail_int(double t) const { return tail_poly(t, 0); }
  double tail_mom(double t) const { return tail_poly(t, 1); }

  double tail_poly(double t, int k) const {
    if (t <= 0.0) return 0.0;
    const auto& cum = (k == 0) ? cumI : cumM;
    auto piece = [&](double A, double D, double q, double a, double b) {
      double e1 = k + 1.0, eq = q + k + 1.0;
      return A * (std::pow(b, e1) - std::pow(a, e1)) / e1 +
             D * (std::pow(b, eq) - std::pow(a, eq)) / eq;
    };
    if (t <= s.front()) return piece(headA, headC, q0, 0.0, t);
    if (t >= s.back()) {
      double e = qI + k + 1.0;
      // e < 1 always; e may be negative (finite limit) or positive (growth)
      return cum.back() + tailC * (std::pow(t, e) - std::pow(s.back(), e)) / e;
    }
    std::size_t i = seg_index(t);
    return cum[i] + piece(segA[i], segD[i], p[i] + 1.0, s[i], t);
  }

  // int_a^b e^{-lambda s} levy_tail(s) ds over one power piece A + D s^q,
  // b may be +inf (A must then be 0)
  static double exp_piece(double lambda, double A, double D, double q, double a, double b) {
    double out = 0.0;
    if (A != 0.0) out += A * std::exp(-lambda * a) * (-std::expm1(-lambda * (b - a))) / lambda;
    if (D != 0.0) {
      double scale = std::pow(lambda, -q - 1.0);
      double ga, gb;
      if (std::isinf(b)) {
        gb = 0.0;
        ga = upper_gamma(q + 1.0, lambda * a);
      } else if (lambda * b <= 1.0 && q + 1.0 > 0.0) {
        // lower-gamma form avoids cancellation of two near-Gamma values
        return out + D * scale * (lower_gamma(q + 1.0, lambda * b) - lower_gamma(q + 1.0, lambda * a));
      } else {
        ga = upper_gamma(q + 1.0, lambda * a);
        gb = upper_gamma(q + 1.0, lambda * b);
      }
      out += D * scale * (ga - gb);
    }
    return out;
  }

  double laplace_tail_transform(double lambda) const {
    // int_0^inf e^{-lambda s} levy_tail(s) ds
    double acc = 0.0;
    // head: int_0^{s0} e^{-ls}(headA + headC s^{q0})
    acc += headA * (-std::expm1(-lambda * s.front())) / lambda;
    acc += headC * std::pow(lambda, -q0 - 1.0) * lower_gamma(q0 + 1.0, lambda * s.front());
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      acc += exp_piece(lambda, segA[i], segD[i], p[i] + 1.0, s[i], s[i + 1]);
    acc += exp_piece(lambda, 0.0, tailC, qI, s.back(),
                     std::numeric_limits<double>::infinity());
    return acc;
  }

  // direct psi by oscillatory quadrature; used to seed the spline
  std::complex<double> psi_direct(double xi) const {
    std::complex<double> I(0.0, 0.0);
    const double s0 = s.front(), sN = s.back();

    // [0, h]: Taylor of e^{i xi s} against the head power law
    double h = std::min(s0, 0.5 / xi);
    {
      std::complex<double> term(1.0, 0.0);
      for (int k = 0; k <= 14; ++k) {
        if (k > 0) term *= kI * xi / double(k);
        I += term * (headA * std::pow(h, k + 1.0) / (k + 1.0) +
                     headC * std::pow(h, k + q0 + 1.0) / (k + q0 + 1.0));
      }
    }
    if (h < s0) {
      // remainder of the head as an envelope bundle
      double w = s0 - h;
      FilonPanels pan([&](double u) { return std::complex<double>(headA + headC * std::pow(h + u, q0), 0.0); }, w);
      I += std::exp(kI * xi * h) * pan.transform(-xi);
    }
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
      I += std::exp(kI * xi * s[i]) * seg_panels[i].transform(-xi);

    // tail: power law to infinity
    double X = sN;
    if (xi * X < 25.0) {
      double Xext = 25.0 / xi;
      FilonPanels pan([&](double u) { return std::complex<double>(tailC * std::pow(X + u, qI), 0.0); }, Xext - X);
      I += std::exp(kI * xi * X) * pan.transform(-xi);
      X = Xext;
    }
    {
      // int_X^inf s^qI e^{i xi s} ds by repeated integration by parts
      std::complex<double> term = -std::pow(X, qI) / (kI * xi);
      std::complex<double> sum = term;
      for (int k = 1; k < 10; ++k) {
        term *= -(qI - (k - 1)) / (kI * xi * X);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) break;
      }
      I += tailC * std::exp(kI * xi * X) * sum;
    }
    return -kI * xi * I;
  }

  std::complex<double> psi_lookup(double xi) const {
    if (xi == 0.0) return {0.0, 0.0};
    double ax = std::fabs(xi);
    double lx = std::log(ax);
    double lre_v, lim_v;
    if (lx < lxi_lo) {
      lre_v = lre.y_front() + sl_re_lo * (lx - lxi_lo);
      lim_v = lim.y_front() + sl_im_lo * (lx - lxi_lo);
    } else if (lx > lxi_hi) {
      lre_v = lre.y_back() + sl_re_hi * (lx - lxi_hi);
      lim_v = lim.y_back() + sl_im_hi * (lx - lxi_hi);
    } else {
      lre_v = lre.eval(lx);
      lim_v = lim.eval(lx);
    }
    std::complex<double> v(std::exp(lre_v), -std::exp(lim_v));
    return xi > 0 ? v : std::conj(v);
  }

  void build(const TabulatedKind& kind) {
    s = kind.s;
    nu = kind.nu;
    const std::size_t n = s.size();
    if (n < 2) throw std::invalid_argument("tabulated model needs at least 2 rows");
    for (std::size_t i = 0; i < n; ++i) {
      if (!(s[i] > 0.0) || !(nu[i] > 0.0))
        throw std::invalid_argument("tabulated model needs positive s and nu");
      if (i > 0 && !(s[i] > s[i - 1]))
        throw std::invalid_argument("tabulated model needs strictly increasing s");
    }
    p0 = nudge_exponent(kind.exp0);
    pI = nudge_exponent(kind.exp_inf);
    if (!(p0 > -2.0 && p0 <= -1.0))
      throw std::invalid_argument("tabulated exp0 must lie in (-2, -1]");
    if (!(pI < -1.0)) throw std::invalid_argument("tabulated exp_inf must be < -1");
    q0 = p0 + 1.0;
    qI = pI + 1.0;

    p.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i)
      p[i] = nudge_exponent(std::log(nu[i + 1] / nu[i]) / std::log(s[i + 1] / s[i]));

    // tail mass from the last knot outward, then march inward
    nubar.assign(n, 0.0);
    nubar[n - 1] = nu[n - 1] * s[n - 1] / (-1.0 - pI);
    tailC = nu[n - 1] * std::pow(s[n - 1], -pI) / (-qI);
    for (std::size_t i = n - 1; i-- > 0;) {
      double q = p[i] + 1.0;
      double mass = nu[i] * std::pow(s[i], -p[i]) *
                    (std::pow(s[i + 1], q) - std::pow(s[i], q)) / q;
      nubar[i] = nubar[i + 1] + mass;
    }
    segA.resize(n - 1);
    segD.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double q = p[i] + 1.0;
      segD[i] = -nu[i] * std::pow(s[i], -p[i]) / q;
      segA[i] = nubar[i + 1] - segD[i] * std::pow(s[i + 1], q);
    }
    headC = -nu[0] * std::pow(s[0], -p0) / q0;
    headA = nubar[0] - headC * std::pow(s[0], q0);

    cumI.assign(n, 0.0);
    cumM.assign(n, 0.0);
    cumI[0] = headA * s[0] + headC * std::pow(s[0], q0 + 1.0) / (q0 + 1.0);
    cumM[0] = headA * s[0] * s[0] / 2.0 + headC * std::pow(s[0], q0 + 2.0) / (q0 + 2.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double q = p[i] + 1.0;
      cumI[i + 1] = cumI[i] + segA[i] * (s[i + 1] - s[i]) +
                    segD[i] * (std::pow(s[i + 1], q + 1.0) - std::pow(s[i], q + 1.0)) / (q + 1.0);
      cumM[i + 1] = cumM[i] + segA[i] * (s[i + 1] * s[i + 1] - s[i] * s[i]) / 2.0 +
                    segD[i] * (std::pow(s[i + 1], q + 2.0) - std::pow(s[i], q + 2.0)) / (q + 2.0);
    }
    drift = (qI < -1.0)
                ? cumI[n - 1] + tailC * std::pow(s[n - 1], qI + 1.0) / (-qI - 1.0)
                : std::numeric_limits<double>::infinity();

    seg_panels.reserve(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double a = s[i], w = s[i + 1] - s[i];
      double A = segA[i], D = segD[i], q = p[i] + 1.0;
      seg_panels.emplace_back(
          [A, D, q, a](double u) { return std::complex<double>(A + D * std::pow(a + u, q), 0.0); }, w);
    }

    // psi on a log grid, 32 nodes per decade
    double xi_lo = 1e-4 / s.back(), xi_hi = 1e5 / s.front();
    int decades = int(std::ceil(std::log10(xi_hi / xi_lo)));
    int npts = decades * 32 + 1;
    std::vector<double> lx(npts), yre(npts), yim(npts);
    for (int i = 0; i < npts; ++i) {
      lx[i] = std::log(xi_lo) + (std::log(xi_hi) - std::log(xi_lo)) * i / (npts - 1);
      std::complex<double> v = psi_direct(std::exp(lx[i]));
      yre[i] = std::log(std::max(v.real(), 1e-300));
      yim[i] = std::log(std::max(-v.imag(), 1e-300));
    }
    lxi_lo = lx.front();
    lxi_hi = lx.back();
    lre = CubicSpline(lx, yre);
    lim = CubicSpline(std::move(lx), yim);
    sl_re_lo = lre.deriv(lxi_lo);
    sl_re_hi = lre.deriv(lxi_hi);
    sl_im_lo = lim.deriv(lxi_lo);
    sl_im_hi = lim.deriv(lxi_hi);
  }
};

BernsteinModel BernsteinModel::stable(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("stable: beta must be in (0,1)");
  BernsteinModel m;
  m.kind_ = StableKind{beta};
  m.name_ = format_id("Stable(beta=%g)", beta);
  m.id_ = format_id("stable:%.17g", beta);
  return m;
}

BernsteinModel BernsteinModel::relativistic(double beta, double mass) {
  if (!(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("relativistic: beta must be in (0,1)");
  if (!(mass > 0.0)) throw std::invalid_argument("relativistic: m must be positive");
  BernsteinModel m;
  m.kind_ = RelativisticKind{beta, mass};
  m.name_ = format_id("RelativisticStable(beta=%g,m=%g)", beta, mass, true);
  m.id_ = format_id("relativistic:%.17g,%.17g", beta, mass, true);
  return m;
}

BernsteinModel BernsteinModel::tabulated(TabulatedKind t) {
  auto aux = std::make_shared<TabAux>();
  aux->build(t);
  BernsteinModel m;
  m.kind_ = std::move(t);
  m.tab_ = std::move(aux);
  m.name_ = "Tabulated(" + std::to_string(m.as_tabulated()->s.size()) + " rows)";
  m.id_ = "tabulated:" + std::to_string(m.as_tabulated()->s.size()) + ":" +
          format_id("%.17g,%.17g", m.as_tabulated()->s.front(), m.as_tabulated()->nu.front(), true);
  return m;
}

double BernsteinModel::phi(double lambda) const {
  if (lambda < 0.0) throw std::domain_error("phi: lambda must be >= 0");
  if (lambda == 0.0) return 0.0;
  if (auto* st = as_stable()) return std::pow(lambda, st->beta);
  if (auto* rel = as_relativistic())
    return std::pow(lambda + rel->m, rel->beta) - std::pow(rel->m, rel->beta);
  return lambda * tab_->laplace_tail_transform(lambda);
}

std::complex<double> BernsteinModel::psi(double xi) const {
  if (xi == 0.0) return {0.0, 0.0};
  if (auto* st = as_stable()) {
    double b = st->beta;
    return std::pow(std::fabs(xi), b) * std::polar(1.0, -kPi * b / 2.0 * (xi > 0 ? 1.0 : -1.0));
  }
  if (auto* rel = as_relativistic()) {
    std::complex<double> z(rel->m, -xi);
    return std::pow(z, rel->beta) - std::pow(rel->m, rel->beta);
  }
  return tab_->psi_lookup(xi);
}

std::complex<double> BernsteinModel::dpsi(double xi) const {
  if (auto* st = as_stable()) {
    double b = st->beta;
    if (xi == 0.0) return {0.0, 0.0};
    std::complex<double> z = -kI * xi;
    return b * std::pow(z, b - 1.0) * (-kI);
  }
  if (auto* rel = as_relativistic()) {
    std::complex<double> z(rel->m, -xi);
    return rel->beta * std::pow(z, rel->beta - 1.0) * (-kI);
  }
  // log-log spline slopes give d psi / d xi componentwise
  double h = std::max(1e-6, 1e-6 * std::fabs(xi));
  return (psi(xi + h) - psi(xi - h)) / (2.0 * h);
}

double BernsteinModel::levy_density(double s) const {
  if (!(s > 0.0)) throw std::domain_error("levy_density: s must be > 0");
  if (auto* st = as_stable()) {
    double b = st->beta;
    return b * rgamma(1.0 - b) * std::pow(s, -1.0 - b);
  }
  if (auto* rel = as_relativistic()) {
    double b = rel->beta;
    return b * rgamma(1.0 - b) * std::pow(s, -1.0 - b) * std::exp(-rel->m * s);
  }
  const TabAux& t = *tab_;
  if (s <= t.s.front()) return t.nu.front() * std::pow(s / t.s.front(), t.p0);
  if (s >= t.s.back()) return t.nu.back() * std::pow(s / t.s.back(), t.pI);
  std::size_t i = t.seg_index(s);
  return t.nu[i] * std::pow(s / t.s[i], t.p[i]);
}

double BernsteinModel::levy_tail(double s) const {
  if (!(s > 0.0)) throw std::domain_error("levy_tail: s must be > 0");
  if (auto* st = as_stable()) return std::pow(s, -st->beta) * rgamma(1.0 - st->beta);
  if (auto* rel = as_relativistic()) {
    double b = rel->beta, m = rel->m;
    return b * std::pow(m, b) * rgamma(1.0 - b) * upper_gamma(-b, m * s);
  }
  return tab_->nubar_at(s);
}

double BernsteinModel::tail_integral(double t) const {
  if (t < 0.0) throw std::domain_error("tail_integral: t must be >= 0");
  if (t == 0.0) return 0.0;
  if (auto* st = as_stable()) {
    double b = st->beta;
    return std::pow(t, 1.0 - b) / (1.0 - b) * rgamma(1.0 - b);
  }
  if (auto* rel = as_relativistic()) {
    double b = rel->beta, m = rel->m;
    double bracket = t * upper_gamma(-b, m * t) + lower_gamma(1.0 - b, m * t) / m;
    return b * std::pow(m, b) * rgamma(1.0 - b) * bracket;
  }
  return tab_->tail_int(t);
}

double BernsteinModel::tail_mass(double a, double b) const {
  if (!(a >= 0.0 && b >= a)) throw std::domain_error("tail_mass: need 0 <= a <= b");
  return tail_integral(b) - tail_integral(a);
}

double BernsteinModel::tail_first_moment(double a, double b) const {
  if (!(a >= 0.0 && b >= a)) throw std::domain_error("tail_first_moment: need 0 <= a <= b");
  if (auto* st = as_stable()) {
    double be = st->beta;
    return (std::pow(b, 2.0 - be) - std::pow(a, 2.0 - be)) / (2.0 - be) * rgamma(1.0 - be);
  }
  if (auto* rel = as_relativistic()) {
    double be = rel->beta, m = rel->m;
    auto G = [be, m](double t) {
      if (t == 0.0) return 0.0;
      return t * t / 2.0 * upper_gamma(-be, m * t) +
             lower_gamma(2.0 - be, m * t) / (2.0 * m * m);
    };
    return be * std::pow(m, be) * rgamma(1.0 - be) * (G(b) - G(a));
  }
  return tab_->tail_mom(b) - tab_->tail_mom(a);
}

double BernsteinModel::regular_variation_index() const {
  if (auto* st = as_stable()) return st->beta;
  if (is_relativistic()) return 1.0;
  auto lam = log_grid(1e-4, 1e-2, 25);
  std::vector<double> lx(lam.size()), ly(lam.size());
  for (std::size_t i = 0; i < lam.size(); ++i) {
    lx[i] = std::log(lam[i]);
    ly[i] = std::log(phi(lam[i]));
  }
  return fit_line(lx, ly).slope;
}

std::optional<double> BernsteinModel::drift_at_zero() const {
  if (is_stable()) return std::nullopt;
  if (auto* rel = as_relativistic()) return rel->beta * std::pow(rel->m, rel->beta - 1.0);
  if (std::isfinite(tab_->drift)) return tab_->drift;
  return std::nullopt;
}

OreyBound BernsteinModel::orey_lower_bound(double xi_max) const {
  OreyBound b;
  if (auto* st = as_stable()) {
    // Re psi = cos(pi beta/2) xi^beta exactly
    b.q = st->beta;
    b.c = std::cos(kPi * st->beta / 2.0);
    b.gamma = 2.0 - b.q;
    b.xi_min = 0.0;
    b.verified = true;
    return b;
  }
  if (auto* rel = as_relativistic()) {
    // Re psi >= cos(pi beta/2) xi^beta - m^beta pointwise, so with
    // xi_min = m (2/cos)^{1/beta} half the stable envelope is a true bound.
    double be = rel->beta, m = rel->m;
    double cosb = std::cos(kPi * be / 2.0);
    b.q = be;
    b.c = 0.5 * cosb;
    b.gamma = 2.0 - be;
    b.xi_min = m * std::pow(2.0 / cosb, 1.0 / be);
    b.verified = true;
    return b;
  }
  // fitted envelope on the top decades of the sampled range
  double xi_lo = xi_max / 100.0;
  auto xs = log_grid(xi_lo, xi_max, 120);
  std::vector<double> lx(xs.size()), ly(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(std::max(psi(xs[i]).real(), 1e-300));
  }
  double q = fit_line(lx, ly).slope;
  double c = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i)
    c = std::min(c, psi(xs[i]).real() / std::pow(xs[i], q));
  b.q = q;
  b.c = 0.9 * c;
  b.gamma = 2.0 - q;
  b.xi_min = xi_lo;
  b.verified = false;
  return b;
}

double BernsteinModel::body_scale(double s) const {
  if (!(s > 0.0)) throw std::domain_error("body_scale: s must be > 0");
  // solve phi(1/u) = 1/s for u; phi(lambda) increases in lambda
  double target = 1.0 / s;
  double llo = -69.0, lhi = 69.0;  // lambda in [e^-69, e^69]
  if (phi(std::exp(lhi)) < target) return std::exp(-lhi);
  if (phi(std::exp(llo)) > target) return std::exp(-llo);
  for (int it = 0; it < 200; ++it) {
    double lm = 0.5 * (llo + lhi);
    (phi(std::exp(lm)) < target ? llo : lhi) = lm;
    if (lhi - llo < 1e-13) break;
  }
  return std::exp(-0.5 * (llo + lhi));
}

std::vector<ValidationIssue> BernsteinModel::validate() const {
  std::vector<ValidationIssue> issues;
  char buf[256];

  // phi against quadrature in the parts form lambda int e^{-lambda s} tail(s);
  // the tail grows like s^{-beta} at zero, which stays finite where the
  // density form would overflow
  for (double lambda : {0.3, 1.0, 3.0}) {
    auto f = [&](double s) { return std::exp(-lambda * s) * levy_tail(s); };
    double numeric =
        lambda * (tanh_sinh_integrate(f, 0.0, 1.0) + exp_sinh_integrate(f, 1.0));
    double analytic = phi(lambda);
    if (std::fabs(numeric - analytic) > 1e-5 * std::fabs(analytic)) {
      std::snprintf(buf, sizeof buf,
                    "phi(%g)=%.10g disagrees with Levy-density quadrature %.10g", lambda,
                    analytic, numeric);
      issues.push_back({buf});
    }
  }

  // Im/Re psi against the moment bounds of the Levy measure
  double m1 = tail_integral(1.0) - levy_tail(1.0);        // int_0^1 s nu(ds)
  double m2 = 2.0 * tail_first_moment(0.0, 1.0) - levy_tail(1.0);  // int_0^1 s^2 nu(ds)
  for (double xi : {0.7, 5.0, 40.0}) {
    auto v = psi(xi);
    double im_bound = xi * m1 + levy_tail(1.0);
    double re_bound = xi * xi / 2.0 * m2 + 2.0 * levy_tail(1.0);
    if (v.real() < -1e-12 * std::fabs(v.imag()))
      issues.push_back({"Re psi negative at xi=" + std::to_string(xi)});
    if (std::fabs(v.imag()) > im_bound * (1.0 + 1e-6) + 1e-12)
      issues.push_back({"Im psi exceeds moment bound at xi=" + std::to_string(xi)});
    if (v.real() > re_bound * (1.0 + 1e-6) + 1e-12)
      issues.push_back({"Re psi exceeds moment bound at xi=" + std::to_string(xi)});
  }

  // concavity of phi on a log grid
  auto xs = log_grid(1e-3, 1e3, 41);
  for (std::size_t i = 1; i + 1 < xs.size(); ++i) {
    // chord test: phi(mid) must lie above the chord of its log-neighbours
    double lam_a = xs[i - 1], lam_b = xs[i + 1];
    double mid = 0.5 * (lam_a + lam_b);
    double chord = 0.5 * (phi(lam_a) + phi(lam_b));
    if (phi(mid) < chord * (1.0 - 1e-10)) {
      std::snprintf(buf, sizeof buf, "phi not concave near lambda=%g", mid);
      issues.push_back({buf});
      break;
    }
  }
  return issues;
}

namespace {

TabulatedKind load_levy_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open Levy table: " + path);
  TabulatedKind kind;
  bool have_exp0 = false, have_expinf = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      double v;
      if (ss >> key >> v) {
        if (key == "exp0") {
          kind.exp0 = v;
          have_exp0 = true;
        } else if (key == "exp_inf") {
          kind.exp_inf = v;
          have_expinf = true;
        }
      }
      continue;
    }
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    double a, b;
    if (!(ss >> a)) continue;
    if (!(ss >> b)) {
      // tolerate a header row
      continue;
    }
    kind.s.push_back(a);
    kind.nu.push_back(b);
  }
  if (kind.s.size() < 2) throw std::runtime_error("Levy table has fewer than 2 rows: " + path);
  if (!have_exp0 || !have_expinf)
    throw std::runtime_error("Levy table must declare '# exp0 <v>' and '# exp_inf <v>': " + path);
  return kind;
}

}  // namespace

BernsteinModel parse_model(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("model spec needs 'kind:params', got: " + text);
  std::string kind = text.substr(0, colon), rest = text.substr(colon + 1);
  if (kind == "stable") return BernsteinModel::stable(std::stod(rest));
  if (kind == "relativistic") {
    auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("relativistic needs 'beta,m': " + text);
    return BernsteinModel::relativistic(std::stod(rest.substr(0, comma)),
                                        std::stod(rest.substr(comma + 1)));
  }
  if (kind == "tabulated") return BernsteinModel::tabulated(load_levy_csv(rest));
  throw std::invalid_argument("unknown model kind: " + kind);
}

}  // namespace subdiff
