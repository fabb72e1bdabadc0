#include "subdiff/mc.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <thread>

#include "subdiff/special.hpp"

namespace subdiff {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = std::numbers::pi;

class StableSampler : public IncrementSampler {
 public:
  StableSampler(double beta, double mesh)
      : beta_(beta), scale_(std::pow(mesh, 1.0 / beta)) {}

  // one-sided stable variate with Laplace exponent lambda^beta at unit time
  static double unit(RngStream& rng, double beta) {
    double u = rng.uniform53();
    double e = rng.exponential();
    double pu = kPi * u;
    double lnx = std::log(std::sin(beta * pu)) - (1.0 / beta) * std::log(std::sin(pu)) +
                 ((1.0 - beta) / beta) * (std::log(std::sin((1.0 - beta) * pu)) - std::log(e));
    return std::exp(lnx);
  }

  double sample(RngStream& rng) const override { return scale_ * unit(rng, beta_); }
  std::string describe() const override { return "stable"; }

 private:
  double beta_, scale_;
};

// exponential tilting of the stable increment; acceptance rate is
// exp(-mesh * m^beta), so the mesh bounds the rejection cost a priori
class RelativisticSampler : public IncrementSampler {
 public:
  RelativisticSampler(double beta, double m, double mesh)
      : beta_(beta), m_(m), scale_(std::pow(mesh, 1.0 / beta)) {
    double rate = std::exp(-mesh * std::pow(m, beta));
    if (rate < 1e-3) {
      throw std::invalid_argument(
          "relativistic increment sampler: acceptance rate below 1e-3; refine the mesh");
    }
  }

  double sample(RngStream& rng) const override {
    for (long i = 0; i < 100000000L; ++i) {
      double j = scale_ * StableSampler::unit(rng, beta_);
      if (rng.uniform53() <= std::exp(-m_ * j)) return j;
    }
    throw std::runtime_error("relativistic increment sampler: rejection loop stuck");
  }
  std::string describe() const override { return "relativistic-tilt"; }

 private:
  double beta_, m_, scale_;
};

// jumps above eps as a compound Poisson process, jumps below eps replaced by
// their mean drift
class TabulatedSampler : public IncrementSampler {
 public:
  TabulatedSampler(const BernsteinModel& model, double mesh, double horizon) : mesh_(mesh) {
    eps_ = 1e-6 * horizon;
    rate_ = model.levy_tail(eps_);
    if (!(rate_ > 0.0) || !std::isfinite(rate_)) {
      throw std::invalid_argument("tabulated sampler: tail at the cutoff is not positive finite");
    }
    if (mesh * rate_ > 1e4) {
      throw std::invalid_argument(
          "tabulated sampler: mesh * tail(eps) exceeds 1e4 jumps per step; coarsen the model "
          "or refine nothing further");
    }
    drift_per_step_ = mesh * (model.tail_integral(eps_) - eps_ * rate_);

    // quantile table for the restricted jump law: tail(q(u)) = u * rate
    const std::size_t n = 4096;
    lu0_ = std::log(1e-12);
    dlu_ = -lu0_ / double(n - 1);
    ls_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double target = std::exp(lu0_ + dlu_ * double(i)) * rate_;
      double lo = eps_, hi = eps_;
      while (model.levy_tail(hi) > target) {
        hi *= 2.0;
        if (hi > 1e300) break;
      }
      double lls = std::log(lo), lhs = std::log(hi);
      for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lls + lhs);
        if (model.levy_tail(std::exp(mid)) > target) {
          lls = mid;
        } else {
          lhs = mid;
        }
      }
      ls_[i] = 0.5 * (lls + lhs);
    }
  }

  double sample(RngStream& rng) const override {
    double r = mesh_ * rate_;
    double total = drift_per_step_;
    double acc = rng.exponential();
    while (acc < r) {
      total += jump(rng.uniform53());
      acc += rng.exponential();
    }
    return total;
  }
  std::string describe() const override { return "tabulated-cpp"; }

 private:
  double jump(double u) const {
    double lu = std::clamp(std::log(u), lu0_, 0.0);
    double pos = (lu - lu0_) / dlu_;
    std::size_t i = std::min<std::size_t>(std::size_t(pos), ls_.size() - 2);
    double frac = std::clamp(pos - double(i), 0.0, 1.0);
    return std::exp(ls_[i] + frac * (ls_[i + 1] - ls_[i]));
  }

  double mesh_, eps_, rate_, drift_per_step_;
  double lu0_, dlu_;
  std::vector<double> ls_;
};

}  // namespace

std::unique_ptr<IncrementSampler> make_increment_sampler(const BernsteinModel& model,
                                                         double mesh, double horizon) {
  if (!(mesh > 0.0)) throw std::invalid_argument("make_increment_sampler: mesh must be positive");
  if (const auto* k = model.as_stable()) {
    return std::make_unique<StableSampler>(k->beta, mesh);
  }
  if (const auto* k = model.as_relativistic()) {
    return std::make_unique<RelativisticSampler>(k->beta, k->m, mesh);
  }
  if (!(horizon > 0.0)) {
    throw std::invalid_argument("make_increment_sampler: tabulated sampler needs a horizon");
  }
  return std::make_unique<TabulatedSampler>(model, mesh, horizon);
}

// ---------------------------------------------------------------------------
// path generation and the ordered streaming fold

namespace {

struct PathScratch {
  std::vector<double> L, X;
};

void generate_path(const IncrementSampler& sampler, double mesh, const std::vector<double>& t,
                   double x0, std::uint64_t seed, std::uint64_t idx, std::size_t step_cap,
                   PathScratch& out) {
  const std::size_t nt = t.size();
  out.L.assign(nt, 0.0);
  out.X.assign(nt, x0);
  RngStream sub(seed, idx, lanes::kSubordinator);
  std::size_t j = 0;
  while (j < nt && t[j] <= 0.0) ++j;  // L(0) = 0 by convention
  double sigma = 0.0;
  std::size_t k = 0;
  while (j < nt) {
    if (++k > step_cap) {
      throw std::runtime_error("generate_path: subordinator step cap exceeded");
    }
    sigma += sampler.sample(sub);
    double s_op = mesh * double(k);
    while (j < nt && sigma > t[j]) {
      out.L[j] = s_op;
      ++j;
    }
  }
  RngStream bm(seed, idx, lanes::kBrownian);
  double x = x0, lprev = 0.0;
  for (std::size_t i = 0; i < nt; ++i) {
    double dl = out.L[i] - lprev;
    if (dl > 0.0) {
      x += std::sqrt(dl) * bm.normal();
      lprev = out.L[i];
    }
    out.X[i] = x;
  }
}

std::size_t step_cap_for(const BernsteinModel& model, double mesh, double horizon) {
  double scale = 256.0 / (model.phi(1.0 / horizon) * mesh);
  if (!std::isfinite(scale) || scale < 0.0) scale = 0.0;
  return std::size_t(scale) + 100000;
}

}  // namespace

void run_paths(const BernsteinModel& model, double x0, const std::vector<double>& t_grid,
               const McConfig& cfg, const std::vector<RowConsumer*>& consumers) {
  if (t_grid.empty()) throw std::invalid_argument("run_paths: empty time grid");
  if (!(t_grid.front() >= 0.0) || !std::is_sorted(t_grid.begin(), t_grid.end())) {
    throw std::invalid_argument("run_paths: time grid must be ascending and nonnegative");
  }
  if (cfg.n_paths == 0) throw std::invalid_argument("run_paths: n_paths must be positive");
  auto sampler = make_increment_sampler(model, cfg.mesh, t_grid.back());
  const std::size_t cap = step_cap_for(model, cfg.mesh, std::max(t_grid.back(), 1e-12));

  std::size_t total = 0;
  std::vector<std::size_t> offsets;
  for (auto* c : consumers) {
    offsets.push_back(total);
    total += c->slot_size();
  }

  const std::uint64_t n = cfg.n_paths;
  auto produce = [&](std::uint64_t idx, PathScratch& sc, std::vector<double>& slot) {
    generate_path(*sampler, cfg.mesh, t_grid, x0, cfg.seed, idx, cap, sc);
    PathView v{&t_grid, &sc.L, &sc.X, idx, cfg.seed};
    for (std::size_t c = 0; c < consumers.size(); ++c) {
      consumers[c]->consume(v, slot.data() + offsets[c]);
    }
  };
  auto fold_one = [&](std::uint64_t idx, const std::vector<double>& slot) {
    for (std::size_t c = 0; c < consumers.size(); ++c) {
      consumers[c]->fold(idx, slot.data() + offsets[c]);
    }
  };

  int workers = std::max(1, cfg.workers);
  if (workers == 1) {
    PathScratch sc;
    std::vector<double> slot(total);
    for (std::uint64_t idx = 0; idx < n; ++idx) {
      produce(idx, sc, slot);
      fold_one(idx, slot);
    }
    return;
  }

  // workers produce slots; the fold runs on this thread in index order, so
  // results are identical to the single-worker run
  std::mutex mu;
  std::condition_variable cv_space, cv_ready;
  std::map<std::uint64_t, std::vector<double>> ready;
  std::uint64_t next = 0;
  bool failed = false;
  std::exception_ptr err;
  const std::size_t max_ahead = 8 * std::size_t(workers);

  auto worker_fn = [&](int w) {
    PathScratch sc;
    std::vector<double> slot(total);
    try {
      for (std::uint64_t idx = std::uint64_t(w); idx < n; idx += std::uint64_t(workers)) {
        produce(idx, sc, slot);
        std::unique_lock<std::mutex> lk(mu);
        cv_space.wait(lk, [&] { return failed || idx < next + max_ahead; });
        if (failed) return;
        ready.emplace(idx, slot);
        cv_ready.notify_all();
      }
    } catch (...) {
      std::lock_guard<std::mutex> lk(mu);
      failed = true;
      err = std::current_exception();
      cv_ready.notify_all();
      cv_space.notify_all();
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker_fn, w);

  {
    std::unique_lock<std::mutex> lk(mu);
    while (next < n) {
      cv_ready.wait(lk, [&] { return failed || ready.count(next) > 0; });
      if (failed) break;
      auto node = ready.extract(next);
      lk.unlock();
      fold_one(next, node.mapped());
      lk.lock();
      ++next;
      cv_space.notify_all();
    }
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// crossing detection

namespace {

// First passage of the piecewise path into [level_k, inf) for ascending
// constant levels. Within a step the Brownian bridge maximum given the
// endpoints and the operational-time increment is sampled exactly, so the
// detection has no time-discretization miss; only the reported time within
// the step is interpolated.
void crossing_times_multi(const PathView& v, const std::vector<double>& levels, double* w_out) {
  const auto& t = *v.t;
  const auto& L = *v.L;
  const auto& X = *v.X;
  const std::size_t nl = levels.size();
  for (std::size_t i = 0; i < nl; ++i) w_out[i] = kInf;
  std::size_t ptr = 0;
  while (ptr < nl && levels[ptr] <= X[0]) w_out[ptr++] = t[0];
  if (ptr == nl) return;
  RngStream bridge = v.lane(lanes::kBridgeMax);
  for (std::size_t i = 1; i < t.size() && ptr < nl; ++i) {
    double xa = X[i - 1], xb = X[i];
    double dl = L[i] - L[i - 1];
    double m;
    if (dl > 0.0) {
      double u = bridge.uniform53();
      double dx = xb - xa;
      m = 0.5 * (xa + xb + std::sqrt(dx * dx - 2.0 * dl * std::log(u)));
    } else {
      m = std::max(xa, xb);
    }
    while (ptr < nl && levels[ptr] <= m) {
      double c = levels[ptr];
      double theta = (xb >= c) ? (c - xa) / (xb - xa) : (c - xa) / (2.0 * c - xa - xb);
      w_out[ptr] = t[i - 1] + theta * (t[i] - t[i - 1]);
      ++ptr;
    }
  }
}

// General moving boundary: first grid node at or above the barrier, refined by
// linear interpolation of X - phi across the step. Constant boundaries take
// the exact bridge route instead.
double crossing_time_boundary(const PathView& v, const Boundary& b) {
  if (b.is_constant()) {
    double w;
    std::vector<double> lv{b.value0()};
    crossing_times_multi(v, lv, &w);
    return w;
  }
  const auto& t = *v.t;
  const auto& X = *v.X;
  double phi_a = b.eval(t[0]);
  if (X[0] >= phi_a) return t[0];
  for (std::size_t i = 1; i < t.size(); ++i) {
    double phi_b = b.eval(t[i]);
    if (X[i] >= phi_b) {
      double denom = (X[i] - X[i - 1]) - (phi_b - phi_a);
      double theta = denom > 0.0 ? (phi_a - X[i - 1]) / denom : 1.0;
      theta = std::clamp(theta, 0.0, 1.0);
      return t[i - 1] + theta * (t[i] - t[i - 1]);
    }
    phi_a = phi_b;
  }
  return kInf;
}

struct CrossingConsumer : RowConsumer {
  const Boundary* boundary;
  std::vector<double> times;  // crossed paths only
  std::size_t slot_size() const override { return 1; }
  void consume(const PathView& v, double* slot) const override {
    slot[0] = crossing_time_boundary(v, *boundary);
  }
  void fold(std::uint64_t, const double* slot) override {
    if (std::isfinite(slot[0])) times.push_back(slot[0]);
  }
};

struct MultiLevelConsumer : RowConsumer {
  const std::vector<double>* levels = nullptr;
  std::vector<std::vector<double>>* w = nullptr;
  std::size_t slot_size() const override { return levels->size(); }
  void consume(const PathView& v, double* slot) const override {
    crossing_times_multi(v, *levels, slot);
  }
  void fold(std::uint64_t idx, const double* slot) override {
    for (std::size_t l = 0; l < levels->size(); ++l) (*w)[l][idx] = slot[l];
  }
};

struct KilledHistConsumer : RowConsumer {
  const Boundary* boundary;
  double t_eval = 0.0;
  double x_min = 0.0, width = 0.0;
  std::size_t n_bins = 0;
  std::vector<double>* mass = nullptr;
  std::vector<double>* w = nullptr;
  std::uint64_t alive = 0;
  std::size_t slot_size() const override { return 2; }
  void consume(const PathView& v, double* slot) const override {
    slot[0] = crossing_time_boundary(v, *boundary);
    slot[1] = v.X->back();
  }
  void fold(std::uint64_t, const double* slot) override {
    if (slot[0] <= t_eval) {
      w->push_back(slot[0]);
      return;
    }
    ++alive;
    double pos = (slot[1] - x_min) / width;
    if (pos >= 0.0 && pos < double(n_bins)) (*mass)[std::size_t(pos)] += 1.0;
  }
};

struct ReflectionConsumer : RowConsumer {
  double level = 0.0;
  std::vector<std::size_t> eval_idx;  // indices into the run grid
  std::vector<double> sup_count, tail_count;
  std::size_t slot_size() const override { return 2 * eval_idx.size(); }
  void consume(const PathView& v, double* slot) const override {
    const auto& t = *v.t;
    const auto& L = *v.L;
    const auto& X = *v.X;
    RngStream bridge = v.lane(lanes::kBridgeMax);
    double runmax = X[0];
    std::size_t e = 0;
    for (std::size_t j = 0; j < eval_idx.size(); ++j) slot[2 * j] = slot[2 * j + 1] = 0.0;
    while (e < eval_idx.size() && eval_idx[e] == 0) {
      slot[2 * e] = runmax > level ? 1.0 : 0.0;
      slot[2 * e + 1] = X[0] > level ? 1.0 : 0.0;
      ++e;
    }
    for (std::size_t i = 1; i < t.size() && e < eval_idx.size(); ++i) {
      double xa = X[i - 1], xb = X[i];
      double dl = L[i] - L[i - 1];
      double m;
      if (dl > 0.0) {
        double u = bridge.uniform53();
        double dx = xb - xa;
        m = 0.5 * (xa + xb + std::sqrt(dx * dx - 2.0 * dl * std::log(u)));
      } else {
        m = std::max(xa, xb);
      }
      runmax = std::max(runmax, m);
      while (e < eval_idx.size() && eval_idx[e] == i) {
        slot[2 * e] = runmax > level ? 1.0 : 0.0;
        slot[2 * e + 1] = X[i] > level ? 1.0 : 0.0;
        ++e;
      }
    }
  }
  void fold(std::uint64_t, const double* slot) override {
    for (std::size_t j = 0; j < eval_idx.size(); ++j) {
      sup_count[j] += slot[2 * j];
      tail_count[j] += slot[2 * j + 1];
    }
  }
};

struct MsdConsumer : RowConsumer {
  const Boundary* boundary = nullptr;  // null = free case
  std::vector<std::size_t> eval_idx;
  std::vector<double> eval_times;
  std::vector<KahanSum> sum, sumsq;
  std::vector<std::uint64_t> alive;
  std::size_t slot_size() const override { return eval_idx.size() + 1; }
  void consume(const PathView& v, double* slot) const override {
    double w = boundary ? crossing_time_boundary(v, *boundary) : kInf;
    slot[eval_idx.size()] = w;
    const auto& t = *v.t;
    const auto& X = *v.X;
    for (std::size_t j = 0; j < eval_idx.size(); ++j) {
      std::size_t i = eval_idx[j];
      slot[j] = (w > t[i]) ? X[i] * X[i] : 0.0;
    }
  }
  void fold(std::uint64_t, const double* slot) override {
    double w = slot[eval_idx.size()];
    for (std::size_t j = 0; j < eval_idx.size(); ++j) {
      sum[j].add(slot[j]);
      sumsq[j].add(slot[j] * slot[j]);
      if (w > eval_times[j]) ++alive[j];
    }
  }
};

struct SamplePathConsumer : RowConsumer {
  std::size_t keep = 0, nt = 0;
  SamplePaths* out = nullptr;
  std::size_t slot_size() const override { return 2 * nt; }
  void consume(const PathView& v, double* slot) const override {
    for (std::size_t i = 0; i < nt; ++i) {
      slot[i] = (*v.L)[i];
      slot[nt + i] = (*v.X)[i];
    }
  }
  void fold(std::uint64_t idx, const double* slot) override {
    if (idx >= keep) return;
    out->L[idx].assign(slot, slot + nt);
    out->X[idx].assign(slot + nt, slot + 2 * nt);
  }
};

}  // namespace

double CrossingLaw::survival(double t) const {
  if (n_paths == 0) return 1.0;
  std::size_t crossed = std::upper_bound(w.begin(), w.end(), t) - w.begin();
  return 1.0 - double(crossed) / double(n_paths);
}

CrossingLaw first_crossing(const BernsteinModel& model, const Boundary& boundary, double x0,
                           const std::vector<double>& t_grid, const McConfig& cfg) {
  CrossingConsumer cc;
  cc.boundary = &boundary;
  cc.times.reserve(cfg.n_paths);
  run_paths(model, x0, t_grid, cfg, {&cc});
  CrossingLaw law;
  law.horizon = t_grid.back();
  law.n_paths = cfg.n_paths;
  law.boundary_id = boundary.name();
  law.start = x0;
  law.w = std::move(cc.times);
  std::sort(law.w.begin(), law.w.end());
  return law;
}

MultiLevelCrossing first_crossing_levels(const BernsteinModel& model,
                                         const std::vector<double>& levels, double x0,
                                         const std::vector<double>& t_grid,
                                         const McConfig& cfg) {
  if (levels.empty() || !std::is_sorted(levels.begin(), levels.end())) {
    throw std::invalid_argument("first_crossing_levels: levels must be ascending and nonempty");
  }
  MultiLevelCrossing out;
  out.levels = levels;
  out.horizon = t_grid.back();
  out.n_paths = cfg.n_paths;
  out.w.assign(levels.size(), std::vector<double>(cfg.n_paths, kInf));
  MultiLevelConsumer mc;
  mc.levels = &out.levels;
  mc.w = &out.w;
  run_paths(model, x0, t_grid, cfg, {&mc});
  return out;
}

KilledHistogram killed_density_histogram(const BernsteinModel& model, const Boundary& boundary,
                                         double x0, double t_eval, std::size_t detect_steps,
                                         double x_min, double x_max, std::size_t n_bins,
                                         const McConfig& cfg) {
  if (!(t_eval > 0.0) || detect_steps < 1 || n_bins < 1 || !(x_max > x_min)) {
    throw std::invalid_argument("killed_density_histogram: bad arguments");
  }
  KilledHistogram h;
  h.n_paths = cfg.n_paths;
  h.edges = linear_grid(x_min, x_max, n_bins + 1);
  h.mass.assign(n_bins, 0.0);
  KilledHistConsumer kc;
  kc.boundary = &boundary;
  kc.t_eval = t_eval;
  kc.x_min = x_min;
  kc.width = (x_max - x_min) / double(n_bins);
  kc.n_bins = n_bins;
  kc.mass = &h.mass;
  kc.w = &h.w;
  run_paths(model, x0, linear_grid(0.0, t_eval, detect_steps + 1), cfg, {&kc});
  h.n_alive = kc.alive;
  for (double& m : h.mass) m /= double(cfg.n_paths);
  std::sort(h.w.begin(), h.w.end());
  return h;
}

ReflectionEstimate reflection_estimate(const BernsteinModel& model, double level,
                                       const std::vector<double>& t_eval, const McConfig& cfg) {
  if (t_eval.empty() || !std::is_sorted(t_eval.begin(), t_eval.end())) {
    throw std::invalid_argument("reflection_estimate: eval times must be ascending");
  }
  std::vector<double> grid = t_eval;
  if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
  ReflectionConsumer rc;
  rc.level = level;
  for (double te : t_eval) {
    rc.eval_idx.push_back(std::lower_bound(grid.begin(), grid.end(), te) - grid.begin());
  }
  rc.sup_count.assign(t_eval.size(), 0.0);
  rc.tail_count.assign(t_eval.size(), 0.0);
  run_paths(model, 0.0, grid, cfg, {&rc});
  ReflectionEstimate est;
  est.t = t_eval;
  est.n_paths = cfg.n_paths;
  double n = double(cfg.n_paths);
  for (std::size_t j = 0; j < t_eval.size(); ++j) {
    double ps = rc.sup_count[j] / n;
    double pt = rc.tail_count[j] / n;
    est.p_sup.push_back(ps);
    est.p_twice_tail.push_back(2.0 * pt);
    est.se_sup.push_back(std::sqrt(std::max(ps * (1.0 - ps), 0.0) / n));
    est.se_tail.push_back(2.0 * std::sqrt(std::max(pt * (1.0 - pt), 0.0) / n));
  }
  return est;
}

MsdEstimate msd_estimate(const BernsteinModel& model, const Boundary* boundary, double x0,
                         const std::vector<double>& t_eval, const McConfig& cfg) {
  if (t_eval.empty() || !std::is_sorted(t_eval.begin(), t_eval.end())) {
    throw std::invalid_argument("msd_estimate: eval times must be ascending");
  }
  std::vector<double> grid = t_eval;
  if (grid.front() > 0.0) grid.insert(grid.begin(), 0.0);
  if (boundary != nullptr && !boundary->is_constant()) {
    // non-constant levels are detected by node scan, not the bridge maximum,
    // so the walk needs a grid much finer than the eval times
    auto dense = linear_grid(0.0, t_eval.back(), 513);
    grid.insert(grid.end(), dense.begin(), dense.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  MsdConsumer mcons;
  mcons.boundary = boundary;
  mcons.eval_times = t_eval;
  for (double te : t_eval) {
    mcons.eval_idx.push_back(std::lower_bound(grid.begin(), grid.end(), te) - grid.begin());
  }
  mcons.sum.assign(t_eval.size(), KahanSum{});
  mcons.sumsq.assign(t_eval.size(), KahanSum{});
  mcons.alive.assign(t_eval.size(), 0);

  run_paths(model, x0, grid, cfg, {&mcons});

  MsdEstimate est;
  est.t = t_eval;
  est.n_paths = cfg.n_paths;
  double n = double(cfg.n_paths);
  for (std::size_t j = 0; j < t_eval.size(); ++j) {
    double mean = mcons.sum[j].value() / n;
    double var = std::max(mcons.sumsq[j].value() / n - mean * mean, 0.0);
    est.msd.push_back(mean);
    est.se.push_back(std::sqrt(var / n));
    est.alive_fraction.push_back(boundary ? double(mcons.alive[j]) / n : 1.0);
  }
  return est;
}

SamplePaths sample_paths(const BernsteinModel& model, double x0,
                         const std::vector<double>& t_grid, const McConfig& cfg,
                         std::size_t keep) {
  keep = std::min<std::size_t>(keep, cfg.n_paths);
  SamplePaths out;
  out.t = t_grid;
  out.L.assign(keep, {});
  out.X.assign(keep, {});
  SamplePathConsumer sc;
  sc.keep = keep;
  sc.nt = t_grid.size();
  sc.out = &out;
  run_paths(model, x0, t_grid, cfg, {&sc});
  return out;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(samples.begin(), samples.end());
  double n = double(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf(samples[i]);
    d = std::max(d, std::abs(f - double(i) / n));
    d = std::max(d, std::abs(f - double(i + 1) / n));
  }
  return d;
}

double dkw_bound(std::uint64_t n, double alpha) {
  if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("dkw_bound: need n > 0 and alpha in (0,1)");
  }
  return std::sqrt(std::log(2.0 / alpha) / (2.0 * double(n)));
}

}  // namespace subdiff
