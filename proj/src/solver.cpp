#include "subdiff/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "subdiff/msd.hpp"
#include "subdiff/nonlocal_op.hpp"
#include "subdiff/special.hpp"

namespace subdiff {

double BumpSpec::eval(double x) const {
  double r = std::fabs(x - center);
  double half = 0.5 * width;
  if (r >= half) return 0.0;
  if (shape == Shape::Cosine) {
    double c = std::cos(3.14159265358979323846 * (x - center) / width);
    return height * c * c;
  }
  return height * (1.0 - r / half);
}

std::string BumpSpec::describe() const {
  std::ostringstream os;
  os << (shape == Shape::Cosine ? "cosine" : "triangle") << ":" << center << "," << width << ","
     << height;
  return os.str();
}

BumpSpec parse_bump(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bump spec needs 'shape:c,w,h'");
  std::string shape = text.substr(0, colon);
  BumpSpec b;
  if (shape == "cosine") {
    b.shape = BumpSpec::Shape::Cosine;
  } else if (shape == "triangle") {
    b.shape = BumpSpec::Shape::Triangle;
  } else {
    throw std::invalid_argument("bump shape must be cosine or triangle: " + shape);
  }
  char comma1 = 0, comma2 = 0;
  std::istringstream is(text.substr(colon + 1));
  if (!(is >> b.center >> comma1 >> b.width >> comma2 >> b.height) || comma1 != ',' ||
      comma2 != ',') {
    throw std::invalid_argument("bump spec needs 'shape:center,width,height': " + text);
  }
  if (!(b.width > 0.0)) throw std::invalid_argument("bump width must be positive");
  return b;
}

namespace {

// uniform x lattice anchored at phi(0): phi(0) is always a node, x_min snaps
// down onto the lattice, and the top extends two nodes past sup phi
struct Lattice {
  std::vector<double> x;
  double dx = 0.0;
  std::size_t k0 = 0;  // index of the phi(0) node
};

Lattice make_lattice(const BernsteinModel& model, const Boundary& boundary,
                     const SolveGrid& grid) {
  if (!(grid.dx > 0.0) || !(grid.t_max > 0.0) || grid.nt < 2) {
    throw std::invalid_argument("solver grid: need dx > 0, t_max > 0, nt >= 2");
  }
  double c0 = boundary.value0();
  double lo = grid.x_min;
  if (std::isnan(lo)) {
    double U = Potential(model, grid.t_max).value(grid.t_max);
    lo = c0 - 12.0 * std::sqrt(2.0 * U);
  }
  if (!(lo < c0)) throw std::invalid_argument("solver grid: x_min must be below phi(0)");
  double phimax = c0;
  for (std::size_t k = 0; k < grid.nt; ++k) {
    phimax = std::max(phimax, boundary.eval(grid.t_max * double(k) / double(grid.nt - 1)));
  }
  std::size_t k_lo = std::size_t(std::ceil((c0 - lo) / grid.dx - 1e-9));
  std::size_t k_hi = std::size_t(std::ceil((phimax - c0) / grid.dx - 1e-9)) + 2;
  Lattice lat;
  lat.dx = grid.dx;
  lat.k0 = k_lo;
  lat.x.resize(k_lo + k_hi + 1);
  for (std::size_t j = 0; j < lat.x.size(); ++j) {
    lat.x[j] = c0 + (double(j) - double(k_lo)) * grid.dx;
  }
  return lat;
}

std::vector<double> uniform_times(double t_max, std::size_t nt) {
  std::vector<double> t(nt);
  for (std::size_t k = 0; k < nt; ++k) t[k] = t_max * double(k) / double(nt - 1);
  return t;
}

constexpr double kTinyTau = 1e-12;

}  // namespace

double dynkin_hunt_q(const KernelEvaluator& ev, const CrossingLaw& law, const Boundary& boundary,
                     double t, double x, double y, double* clamp_mag) {
  if (!law.boundary_id.empty() && law.boundary_id != boundary.name()) {
    throw std::invalid_argument("dynkin_hunt_q: crossing law belongs to boundary '" +
                                law.boundary_id + "', not '" + boundary.name() + "'");
  }
  if (std::fabs(law.start - y) > 1e-12 * (1.0 + std::fabs(y))) {
    throw std::invalid_argument("dynkin_hunt_q: crossing law was generated for a different start");
  }
  if (!(y < boundary.value0())) {
    throw std::invalid_argument("dynkin_hunt_q: start must lie strictly below phi(0)");
  }
  if (!(t > 0.0) || t > law.horizon * (1.0 + 1e-9)) {
    throw std::invalid_argument("dynkin_hunt_q: t outside the crossing-law horizon");
  }
  double p = ev.p(t, x, y);
  KahanSum corr;
  for (double w : law.w) {
    if (w > t) break;
    double tau = t - w;
    if (tau < kTinyTau) continue;  // kernel mass at zero elapsed time is nil off-diagonal
    corr.add(ev.p(tau, x, boundary.eval(w)));
  }
  double q = p - corr.value() / double(law.n_paths);
  if (q < 0.0) {
    if (clamp_mag) *clamp_mag += -q;
    return 0.0;
  }
  return q;
}

std::vector<double> dynkin_hunt_profile(const KernelEvaluator& ev, const CrossingLaw& law,
                                        const Boundary& boundary, double t,
                                        const std::vector<double>& x, std::size_t n_wbins) {
  if (!law.boundary_id.empty() && law.boundary_id != boundary.name()) {
    throw std::invalid_argument("dynkin_hunt_profile: crossing law belongs to boundary '" +
                                law.boundary_id + "', not '" + boundary.name() + "'");
  }
  if (!(law.start < boundary.value0())) {
    throw std::invalid_argument("dynkin_hunt_profile: start must lie strictly below phi(0)");
  }
  if (!(t > 0.0) || t > law.horizon * (1.0 + 1e-9)) {
    throw std::invalid_argument("dynkin_hunt_profile: t outside the crossing-law horizon");
  }
  if (n_wbins < 1) throw std::invalid_argument("dynkin_hunt_profile: n_wbins must be positive");
  double dw = t / double(n_wbins);
  std::vector<double> count(n_wbins, 0.0);
  for (double w : law.w) {
    if (w > t) break;
    std::size_t b = std::min(n_wbins - 1, std::size_t(w / dw));
    count[b] += 1.0;
  }
  std::vector<double> q(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    KahanSum corr;
    for (std::size_t b = 0; b < n_wbins; ++b) {
      if (count[b] == 0.0) continue;
      double wc = (double(b) + 0.5) * dw;
      double tau = t - wc;
      if (tau < kTinyTau) continue;
      corr.add(count[b] * ev.p(tau, x[i], boundary.eval(wc)));
    }
    q[i] = std::max(0.0, ev.p(t, x[i], law.start) - corr.value() / double(law.n_paths));
  }
  return q;
}

namespace {

// p(tau, |d|) tabulated on a log-tau grid for every lattice offset, so the
// crossing-measure corrections become table lookups
class KernelTable {
 public:
  KernelTable(const KernelEvaluator& ev, std::vector<double> d, double tau_max,
              std::size_t n_tau = 600)
      : d_(std::move(d)) {
    ltau_ = log_grid(1e-9 * tau_max, tau_max, n_tau);
    for (double& v : ltau_) v = std::log(v);
    vals_.assign(ltau_.size() * d_.size(), 0.0);
    for (std::size_t i = 0; i < ltau_.size(); ++i) {
      double tau = std::exp(ltau_[i]);
      for (std::size_t j = 0; j < d_.size(); ++j) {
        vals_[i * d_.size() + j] = ev.p(tau, d_[j], 0.0);
      }
    }
  }

  // linear in log tau; below the table the kernel has no off-diagonal mass
  double eval(double tau, std::size_t j) const {
    double lt = std::log(tau);
    if (lt <= ltau_.front()) return 0.0;
    if (lt >= ltau_.back()) return vals_[(ltau_.size() - 1) * d_.size() + j];
    std::size_t i = std::size_t((lt - ltau_.front()) / (ltau_[1] - ltau_[0]));
    i = std::min(i, ltau_.size() - 2);
    double f = (lt - ltau_[i]) / (ltau_[i + 1] - ltau_[i]);
    double a = vals_[i * d_.size() + j], b = vals_[(i + 1) * d_.size() + j];
    return a + f * (b - a);
  }

  const std::vector<double>& offsets() const { return d_; }

 private:
  std::vector<double> ltau_, d_, vals_;
};

// Simpson weights over an odd run of lattice nodes; an even count closes with
// one trapezoid panel (the integrand vanishes at the support edge anyway)
std::vector<double> simpson_weights(std::size_t count, double dx) {
  if (count < 3) throw std::invalid_argument("representation route: support covers < 3 nodes");
  std::vector<double> w(count, 0.0);
  std::size_t m = (count % 2 == 1) ? count : count - 1;
  for (std::size_t i = 0; i + 2 < m + 1; i += 2) {
    w[i] += dx / 3.0;
    w[i + 1] += 4.0 * dx / 3.0;
    w[i + 2] += dx / 3.0;
  }
  if (m != count) {
    w[count - 2] += 0.5 * dx;
    w[count - 1] += 0.5 * dx;
  }
  return w;
}

}  // namespace

SolutionField solve_via_representation(const KernelEvaluator& ev, const Boundary& boundary,
                                       const BumpSpec& f, const SolveGrid& grid,
                                       const McConfig& cfg) {
  const BernsteinModel& model = ev.model();
  Lattice lat = make_lattice(model, boundary, grid);
  double c0 = boundary.value0();
  if (!(f.support_hi() < c0)) {
    throw std::invalid_argument(
        "representation route: initial datum support must stay strictly below phi(0)");
  }
  if (!(f.support_lo() > lat.x.front())) {
    throw std::invalid_argument("representation route: initial datum support leaves the grid");
  }

  SolutionField field;
  field.t_grid = uniform_times(grid.t_max, grid.nt);
  field.x_grid = lat.x;
  field.u.assign(grid.nt * lat.x.size(), 0.0);
  field.boundary_id = boundary.name();
  field.initial_id = f.describe();

  const std::size_t nx = lat.x.size();
  for (std::size_t j = 0; j < nx; ++j) {
    if (lat.x[j] < c0) field.at(0, j) = f.eval(lat.x[j]);
  }

  // y nodes: lattice points covering the support
  std::size_t y_first = nx, y_last = 0;
  for (std::size_t j = 0; j < nx; ++j) {
    if (lat.x[j] >= f.support_lo() - 1e-12 && lat.x[j] <= f.support_hi() + 1e-12) {
      y_first = std::min(y_first, j);
      y_last = std::max(y_last, j);
    }
  }
  if (y_first >= y_last) throw std::invalid_argument("representation route: empty support");
  const std::size_t ny = y_last - y_first + 1;
  auto wts = simpson_weights(ny, lat.dx);
  std::vector<double> yv(ny), fy(ny);
  for (std::size_t j = 0; j < ny; ++j) {
    yv[j] = lat.x[y_first + j];
    fy[j] = f.eval(yv[j]);
  }

  const double T = grid.t_max;
  const std::size_t n_wbins = 512;
  const double dw = T / double(n_wbins);
  const std::size_t detect_steps = 512;

  if (boundary.is_constant()) {
    // one ensemble serves every y by spatial homogeneity: the crossing time
    // from y to level c0 equals the crossing time from 0 to c0 - y
    std::vector<double> levels(ny);
    for (std::size_t j = 0; j < ny; ++j) levels[j] = c0 - yv[ny - 1 - j];
    auto laws = first_crossing_levels(model, levels, 0.0, uniform_times(T, detect_steps + 1), cfg);

    // weighted crossing-mass histogram: the correction kernel p(t-w, x - c0)
    // does not depend on y, so the y-quadrature collapses onto the masses
    std::vector<double> W(n_wbins, 0.0);
    for (std::size_t j = 0; j < ny; ++j) {
      const auto& w = laws.w[ny - 1 - j];  // level c0 - yv[j]
      double coef = wts[j] * fy[j];
      if (coef == 0.0) continue;
      for (double wi : w) {
        if (!(wi <= T)) continue;
        std::size_t b = std::min(std::size_t(wi / dw), n_wbins - 1);
        W[b] += coef;
      }
    }

    std::vector<double> d(nx);
    for (std::size_t i = 0; i < nx; ++i) d[i] = lat.x[i] - c0;
    KernelTable table(ev, d, T);

    for (std::size_t k = 1; k < grid.nt; ++k) {
      double t = field.t_grid[k];
      for (std::size_t i = 0; i < nx; ++i) {
        if (lat.x[i] >= c0) continue;  // exterior stays zero
        KahanSum acc;
        for (std::size_t j = 0; j < ny; ++j) {
          if (fy[j] == 0.0) continue;
          acc.add(wts[j] * fy[j] * ev.p(t, lat.x[i], yv[j]));
        }
        KahanSum corr;
        for (std::size_t b = 0; b < n_wbins; ++b) {
          if (W[b] == 0.0) continue;
          double wbar = (double(b) + 0.5) * dw;
          if (wbar >= t) break;
          corr.add(W[b] * table.eval(t - wbar, i));
        }
        field.at(k, i) = std::max(acc.value() - corr.value() / double(cfg.n_paths), 0.0);
      }
    }
    return field;
  }

  // general boundary: one crossing ensemble per y node, binned onto the w
  // grid together with the boundary location at the bin center
  std::vector<std::vector<double>> mass(ny, std::vector<double>(n_wbins, 0.0));
  for (std::size_t j = 0; j < ny; ++j) {
    if (fy[j] == 0.0) continue;
    auto law = first_crossing(model, boundary, yv[j], uniform_times(T, detect_steps + 1), cfg);
    for (double wi : law.w) {
      if (!(wi <= T)) continue;
      mass[j][std::min(std::size_t(wi / dw), n_wbins - 1)] += 1.0;
    }
  }
  std::vector<double> phi_bin(n_wbins);
  for (std::size_t b = 0; b < n_wbins; ++b) phi_bin[b] = boundary.eval((double(b) + 0.5) * dw);

  for (std::size_t k = 1; k < grid.nt; ++k) {
    double t = field.t_grid[k];
    double phit = boundary.eval(t);
    for (std::size_t i = 0; i < nx; ++i) {
      if (lat.x[i] >= phit) continue;
      KahanSum acc;
      for (std::size_t j = 0; j < ny; ++j) {
        if (fy[j] == 0.0) continue;
        KahanSum corr;
        for (std::size_t b = 0; b < n_wbins; ++b) {
          if (mass[j][b] == 0.0) continue;
          double wbar = (double(b) + 0.5) * dw;
          if (wbar >= t) break;
          corr.add(mass[j][b] * ev.p(t - wbar, lat.x[i], phi_bin[b]));
        }
        double q = ev.p(t, lat.x[i], yv[j]) - corr.value() / double(cfg.n_paths);
        acc.add(wts[j] * fy[j] * std::max(q, 0.0));
      }
      field.at(k, i) = acc.value();
    }
  }
  return field;
}

SolutionField fd_solve(const BernsteinModel& model, const Boundary& boundary, const BumpSpec& f,
                       const SolveGrid& grid) {
  Lattice lat = make_lattice(model, boundary, grid);
  double c0 = boundary.value0();
  if (!(f.support_hi() < c0)) {
    throw std::invalid_argument("fd route: initial datum support must stay strictly below phi(0)");
  }

  SolutionField field;
  field.t_grid = uniform_times(grid.t_max, grid.nt);
  field.x_grid = lat.x;
  field.u.assign(grid.nt * lat.x.size(), 0.0);
  field.boundary_id = boundary.name();
  field.initial_id = f.describe();

  const std::size_t nx = lat.x.size();
  const std::size_t nt = grid.nt;
  const double dt = field.t_grid[1] - field.t_grid[0];
  const double dx2 = lat.dx * lat.dx;

  for (std::size_t j = 0; j < nx; ++j) {
    if (lat.x[j] < c0) field.at(0, j) = f.eval(lat.x[j]);
  }

  auto a = memory_weights(model, dt, nt - 1);  // 1-based
  if (!(a[1] > 0.0) || !std::isfinite(a[1])) {
    throw std::runtime_error("fd route: first memory weight is not positive finite");
  }

  // Thomas scratch
  std::vector<double> diag(nx), rhs(nx), cp(nx), dp(nx);
  const double off = -0.5 / dx2;

  for (std::size_t k = 1; k < nt; ++k) {
    double phit = boundary.eval(field.t_grid[k]);
    // active run: j in [1, hi] with x_j < phi(t_k); x_min row stays pinned
    std::size_t hi = 0;
    for (std::size_t j = 1; j < nx; ++j) {
      if (lat.x[j] < phit) hi = j;
    }
    if (hi == 0) continue;  // fully masked row (boundary at or below x_min)

    for (std::size_t j = 1; j <= hi; ++j) {
      // history sum: a_i (u^{k-i+1} - u^{k-i}) for i = 2..k
      double hsum = 0.0;
      for (std::size_t i = 2; i <= k; ++i) {
        hsum += a[i] * (field.value(k - i + 1, j) - field.value(k - i, j));
      }
      rhs[j] = (a[1] / dt) * field.value(k - 1, j) - hsum / dt;
      diag[j] = a[1] / dt + 1.0 / dx2;
    }

    // Thomas sweep over [1, hi] with zero Dirichlet neighbors on both sides
    cp[1] = off / diag[1];
    dp[1] = rhs[1] / diag[1];
    for (std::size_t j = 2; j <= hi; ++j) {
      double m = diag[j] - off * cp[j - 1];
      cp[j] = off / m;
      dp[j] = (rhs[j] - off * dp[j - 1]) / m;
    }
    field.at(k, hi) = dp[hi];
    for (std::size_t j = hi; j-- > 1;) {
      field.at(k, j) = dp[j] - cp[j] * field.at(k, j + 1);
    }
  }
  return field;
}

MaxPrincipleReport max_principle_check(const SolutionField& field, double extra_tol) {
  MaxPrincipleReport rep;
  const std::size_t nt = field.nt(), nx = field.nx();
  if (nt < 2 || nx < 1) throw std::invalid_argument("max_principle_check: degenerate field");
  double row0_max = 0.0, row0_min = 0.0;
  for (std::size_t j = 0; j < nx; ++j) {
    row0_max = std::max(row0_max, field.value(0, j));
    row0_min = std::min(row0_min, field.value(0, j));
    rep.scale = std::max(rep.scale, std::fabs(field.value(0, j)));
  }
  // exterior Dirichlet zeros are part of the parabolic data, hence the 0 caps
  rep.parabolic_max = std::max(row0_max, 0.0);
  rep.parabolic_min = std::min(row0_min, 0.0);
  rep.interior_max = -std::numeric_limits<double>::infinity();
  rep.interior_min = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < nt; ++k) {
    for (std::size_t j = 0; j < nx; ++j) {
      double v = field.value(k, j);
      if (v > rep.interior_max) {
        rep.interior_max = v;
        rep.argmax_it = k;
        rep.argmax_ix = j;
      }
      rep.interior_min = std::min(rep.interior_min, v);
    }
  }
  rep.tolerance = 1e-6 * rep.scale + extra_tol;
  rep.pass_max = rep.interior_max <= rep.parabolic_max + rep.tolerance;
  rep.pass_min = rep.interior_min >= rep.parabolic_min - rep.tolerance;
  std::ostringstream os;
  os.precision(10);
  os << "interior max " << rep.interior_max << " vs parabolic " << rep.parabolic_max
     << ", interior min " << rep.interior_min << " vs parabolic " << rep.parabolic_min
     << ", tolerance " << rep.tolerance << " -> " << (rep.pass_max && rep.pass_min ? "PASS" : "FAIL");
  rep.summary = os.str();
  return rep;
}

DataContinuityReport data_continuity_check(const SolutionField& a, const SolutionField& b,
                                           const BumpSpec& fa, const BumpSpec& fb,
                                           double extra_tol) {
  if (a.t_grid != b.t_grid || a.x_grid != b.x_grid) {
    throw std::invalid_argument("data_continuity_check: fields must share grids");
  }
  DataContinuityReport rep;
  for (std::size_t i = 0; i < a.u.size(); ++i) {
    rep.sup_diff_u = std::max(rep.sup_diff_u, std::fabs(a.u[i] - b.u[i]));
  }
  // near-true sup of |fa - fb| on a fine sweep of the union support
  double lo = std::min(fa.support_lo(), fb.support_lo());
  double hi = std::max(fa.support_hi(), fb.support_hi());
  for (std::size_t i = 0; i <= 4000; ++i) {
    double x = lo + (hi - lo) * double(i) / 4000.0;
    rep.sup_diff_f = std::max(rep.sup_diff_f, std::fabs(fa.eval(x) - fb.eval(x)));
  }
  double scale = std::max(std::fabs(fa.height), std::fabs(fb.height));
  rep.tolerance = 1e-6 * scale + extra_tol;
  rep.pass = rep.sup_diff_u <= rep.sup_diff_f + rep.tolerance;
  std::ostringstream os;
  os.precision(10);
  os << "sup|u1-u2| " << rep.sup_diff_u << " vs sup|f1-f2| " << rep.sup_diff_f << " + tol "
     << rep.tolerance << " -> " << (rep.pass ? "PASS" : "FAIL");
  rep.summary = os.str();
  return rep;
}

YContinuityReport y_continuity_smoke(const KernelEvaluator& ev, const Boundary& boundary,
                                     double t, double x, const std::vector<double>& y_grid,
                                     const McConfig& cfg, double noise_scale) {
  if (y_grid.size() < 2 || !std::is_sorted(y_grid.begin(), y_grid.end())) {
    throw std::invalid_argument("y_continuity_smoke: need an ascending y grid");
  }
  double c0 = boundary.value0();
  if (!(y_grid.back() < c0)) {
    throw std::invalid_argument("y_continuity_smoke: y grid must stay below phi(0)");
  }
  const BernsteinModel& model = ev.model();
  std::vector<double> grid_t = uniform_times(std::max(t, 1e-12), 257);
  YContinuityReport rep;
  rep.noise_scale = noise_scale;

  if (boundary.is_constant()) {
    // shared ensemble across y (monotone coupling keeps adjacent jumps honest)
    std::vector<double> levels(y_grid.size());
    for (std::size_t j = 0; j < levels.size(); ++j) {
      levels[j] = c0 - y_grid[levels.size() - 1 - j];
    }
    auto ml = first_crossing_levels(model, levels, 0.0, grid_t, cfg);
    for (std::size_t j = 0; j < y_grid.size(); ++j) {
      CrossingLaw law;
      law.horizon = ml.horizon;
      law.n_paths = ml.n_paths;
      law.boundary_id = boundary.name();
      law.start = y_grid[j];
      const auto& w = ml.w[y_grid.size() - 1 - j];
      for (double wi : w) {
        if (std::isfinite(wi)) law.w.push_back(wi);
      }
      std::sort(law.w.begin(), law.w.end());
      rep.q.push_back(dynkin_hunt_q(ev, law, boundary, t, x, y_grid[j]));
    }
  } else {
    for (double y : y_grid) {
      auto law = first_crossing(model, boundary, y, grid_t, cfg);
      rep.q.push_back(dynkin_hunt_q(ev, law, boundary, t, x, y));
    }
  }
  for (std::size_t j = 1; j < rep.q.size(); ++j) {
    rep.max_jump = std::max(rep.max_jump, std::fabs(rep.q[j] - rep.q[j - 1]));
  }
  rep.flagged = rep.max_jump > 4.0 * noise_scale;
  return rep;
}

}  // namespace subdiff
