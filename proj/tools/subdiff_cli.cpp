// subdiff: drives the density, solver, simulation, and verification layers
// off one key-value config with flag overrides, and writes plot-ready CSV
// plus JSON metadata. Exit codes: 0 ok, 1 runtime error, 2 config/validation
// error, 3 at least one check failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "subdiff/bernstein.hpp"
#include "subdiff/boundary.hpp"
#include "subdiff/densities.hpp"
#include "subdiff/heatkernel.hpp"
#include "subdiff/io.hpp"
#include "subdiff/mc.hpp"
#include "subdiff/msd.hpp"
#include "subdiff/nonlocal_op.hpp"
#include "subdiff/rng.hpp"
#include "subdiff/solver.hpp"
#include "subdiff/special.hpp"

namespace {

using namespace subdiff;
namespace fs = std::filesystem;

double now_seconds() {
  using clock = std::chrono::steady_clock;
  static const clock::time_point start = clock::now();
  return std::chrono::duration<double>(clock::now() - start).count();
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    char* end = nullptr;
    double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str()) throw std::invalid_argument("bad number in list: '" + tok + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("empty number list");
  return out;
}

// ---------------------------------------------------------------------------
// config plumbing

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> sets;                           // --set key=value
  std::vector<std::pair<std::string, std::string>> flags;  // named flags, applied last
};

RunConfig resolve_config(const CommonFlags& common) {
  RunConfig cfg;
  if (!common.config_path.empty()) {
    try {
      cfg = load_config(common.config_path);
    } catch (const std::exception& e) {
      throw std::invalid_argument(e.what());
    }
  }
  for (const auto& s : common.sets) apply_override(cfg, s);
  for (const auto& [k, v] : common.flags) cfg.kv[k] = v;
  return cfg;
}

// The hash identifies the experiment, not the execution layout: worker count
// and output location never change any estimate, so they stay out of it.
std::string experiment_hash(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.kv.erase("workers");
  c.kv.erase("out");
  c.kv.erase("prefix");
  return config_hash(c);
}

fs::path output_dir(const RunConfig& cfg) {
  std::string dir = cfg.get("out", "");
  if (dir.empty()) {
    const char* env = std::getenv("SUBDIFF_OUT");
    dir = (env && *env) ? env : ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir);
  return fs::path(dir);
}

void write_resolved_config(const RunConfig& cfg, const fs::path& dir, const std::string& prefix) {
  std::ofstream os(dir / (prefix + "_config.cfg"));
  os << "# resolved configuration, hash " << experiment_hash(cfg) << "\n";
  os << cfg.canonical_text();
}

BernsteinModel make_model(const RunConfig& cfg) {
  std::string spec = cfg.require("model");
  BernsteinModel model = [&] {
    try {
      return parse_model(spec);
    } catch (const std::exception& e) {
      std::string msg = e.what();
      if (msg.find("exp0") != std::string::npos || msg.find("exp_inf") != std::string::npos) {
        msg = "assumption A3 needs the small/large-scale tail exponents: " + msg;
      }
      throw std::invalid_argument("invalid model '" + spec + "': " + msg);
    }
  }();
  auto issues = model.validate();
  if (!issues.empty()) {
    std::string msg = "model '" + spec + "' failed validation:";
    for (const auto& i : issues) msg += "\n  " + i.what;
    throw std::invalid_argument(msg);
  }
  return model;
}

Boundary make_boundary(const RunConfig& cfg, double horizon) {
  std::string spec = cfg.require("boundary");
  Boundary b = [&] {
    try {
      return parse_boundary(spec);
    } catch (const std::exception& e) {
      throw std::invalid_argument("invalid boundary '" + spec + "': " + std::string(e.what()));
    }
  }();
  BoundaryReport rep = b.validate(horizon);
  std::string bad;
  if (!rep.a2a) bad = "a2a (nondecreasing)";
  else if (!rep.a2b) bad = "a2b (strictly increasing until flat)";
  else if (!rep.a2c) bad = "a2c (bounded)";
  else if (!rep.a2d) bad = "a2d (Lipschitz on the horizon)";
  if (!bad.empty()) {
    throw std::invalid_argument("boundary '" + spec + "' violates assumption " + bad);
  }
  return b;
}

// ---------------------------------------------------------------------------
// check bookkeeping shared by all subcommands

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

class CheckList {
 public:
  void add(const std::string& name, bool pass, const std::string& detail, double seconds = 0.0) {
    checks_.push_back({name, pass, detail, seconds});
    std::printf("%s: %s (%s)\n", name.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
  }
  bool all_pass() const {
    return std::all_of(checks_.begin(), checks_.end(), [](const Check& c) { return c.pass; });
  }
  std::size_t fail_count() const {
    return std::count_if(checks_.begin(), checks_.end(), [](const Check& c) { return !c.pass; });
  }
  std::string json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : checks_) {
      arr.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"detail", c.detail},
                     {"seconds", c.seconds}});
    }
    return arr.dump();
  }

 private:
  std::vector<Check> checks_;
};

std::string rel_detail(double err, double tol) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "max rel err %.3g vs %.3g", err, tol);
  return buf;
}

// ---------------------------------------------------------------------------
// density

int cmd_density(const RunConfig& cfg) {
  BernsteinModel model = make_model(cfg);
  std::vector<double> t_grid = parse_list(cfg.get("t", "0.5,1,2"));
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) || t_grid.front() <= 0.0) {
    throw std::invalid_argument("t grid must be positive and ascending");
  }
  std::size_t n_s = cfg.get_u64("n_s", 60);
  std::vector<double> s_grid;
  if (cfg.has("s")) {
    s_grid = parse_list(cfg.require("s"));
  } else if (cfg.has("s_max")) {
    double s_max = cfg.get_double("s_max", 10.0);
    if (!(s_max > 0.0)) throw std::invalid_argument("s_max must be positive");
    s_grid = linear_grid(s_max / double(n_s), s_max, n_s);
  } else {
    s_grid = default_s_grid(model, t_grid.front(), t_grid.back(), n_s);
  }
  bool derivs = cfg.get_u64("derivs", 1) != 0;

  std::string route_key = cfg.get("route", "auto");
  DensityProvenance route;
  if (route_key == "fourier") {
    route = DensityProvenance::FourierConvolution;
  } else if (route_key == "series" || route_key == "auto") {
    if (model.is_stable()) {
      route = DensityProvenance::StableSeries;
    } else if (model.is_relativistic()) {
      route = DensityProvenance::RelativisticSeries;
      RelativisticSeriesProvider probe(model.as_relativistic()->beta, model.as_relativistic()->m);
      if (s_grid.back() > probe.s_upper(t_grid.front())) {
        if (route_key == "series") {
          throw std::invalid_argument("series route does not cover the requested s grid");
        }
        route = DensityProvenance::FourierConvolution;
      }
    } else if (route_key == "series") {
      throw std::invalid_argument("series route requires a stable or relativistic model");
    } else {
      route = DensityProvenance::FourierConvolution;
    }
  } else {
    throw std::invalid_argument("route must be auto, series, or fourier");
  }

  DensityTable table = build_density_table(model, s_grid, t_grid, route, derivs);

  CheckList checks;
  double t0 = now_seconds();

  double min_f = *std::min_element(table.f.begin(), table.f.end());
  checks.add("nonnegative", min_f >= -1e-12,
             "min f = " + format_double(min_f), now_seconds() - t0);

  // sub-probability: trapezoid mass of each t-column must not exceed 1
  t0 = now_seconds();
  double max_mass = 0.0;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    double mass = 0.0;
    // the density is one-sided; account for the untabulated head [0, s_0]
    mass += s_grid.front() * table.value(0, k);
    for (std::size_t i = 0; i + 1 < s_grid.size(); ++i) {
      mass += 0.5 * (s_grid[i + 1] - s_grid[i]) * (table.value(i, k) + table.value(i + 1, k));
    }
    max_mass = std::max(max_mass, mass);
  }
  checks.add("mass_bound", max_mass <= 1.0 + 2e-3,
             "max column mass " + format_double(max_mass), now_seconds() - t0);

  t0 = now_seconds();
  auto engine = FourierEngine::shared(model);
  double lap_tol = cfg.get_double("laplace_tol", 1e-3);
  double lap_err = 0.0;
  double s_probe = s_grid[s_grid.size() / 3];
  for (double lambda : {1.0, 2.0}) {
    LaplacePair pair = laplace_oracle_fL(*engine, s_probe, lambda, 40.0 / lambda);
    if (std::fabs(pair.analytic) < 1e-300) continue;
    lap_err = std::max(lap_err, std::fabs(pair.numeric - pair.analytic) / std::fabs(pair.analytic));
  }
  checks.add("laplace_oracle", lap_err <= lap_tol, rel_detail(lap_err, lap_tol),
             now_seconds() - t0);

  // spot-compare the table against the other evaluation route where possible
  t0 = now_seconds();
  std::shared_ptr<const DensityProvider> alt;
  if (route == DensityProvenance::FourierConvolution) {
    if (model.is_stable()) {
      alt = std::make_shared<StableSeriesProvider>(model.as_stable()->beta);
    } else if (model.is_relativistic()) {
      alt = std::make_shared<RelativisticSeriesProvider>(model.as_relativistic()->beta,
                                                         model.as_relativistic()->m);
    }
  } else {
    alt = std::make_shared<FourierProvider>(model);
  }
  if (alt) {
    RngStream pick(1234, 0, 0);
    double f_peak = *std::max_element(table.f.begin(), table.f.end());
    double max_rel = 0.0;
    int used = 0;
    for (int trial = 0; trial < 24 && used < 5; ++trial) {
      std::size_t i = std::size_t(pick.uniform53() * double(s_grid.size()));
      std::size_t k = std::size_t(pick.uniform53() * double(t_grid.size()));
      i = std::min(i, s_grid.size() - 1);
      k = std::min(k, t_grid.size() - 1);
      if (s_grid[i] > alt->s_upper(t_grid[k])) continue;
      // the oscillatory route carries an absolute noise floor near 1e-7 of
      // the peak, so only cells holding real mass can be compared relatively
      if (table.value(i, k) < 1e-3 * f_peak) continue;
      double ref = alt->f(s_grid[i], t_grid[k]);
      max_rel = std::max(max_rel, std::fabs(table.value(i, k) - ref) / std::fabs(ref));
      ++used;
    }
    if (used > 0) {
      checks.add("route_agreement", max_rel <= 2e-3,
                 rel_detail(max_rel, 2e-3) + " at " + std::to_string(used) + " cells",
                 now_seconds() - t0);
    }
  }

  fs::path dir = output_dir(cfg);
  std::string prefix = cfg.get("prefix", "density");
  std::string hash = experiment_hash(cfg);
  write_density_csv((dir / (prefix + ".csv")).string(), table, {"config_hash=" + hash});
  JsonSidecar sc;
  sc.set("command", "density");
  sc.set("config_hash", hash);
  sc.set("model_id", table.model_id);
  sc.set("route", route == DensityProvenance::FourierConvolution ? "fourier" : "series");
  sc.set_number("n_s", double(s_grid.size()));
  sc.set_number("n_t", double(t_grid.size()));
  sc.set_raw("checks", checks.json());
  sc.write((dir / (prefix + ".json")).string());
  write_resolved_config(cfg, dir, prefix);
  std::printf("wrote %s/%s.{csv,json}\n", dir.string().c_str(), prefix.c_str());
  return checks.all_pass() ? 0 : 3;
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(const RunConfig& cfg) {
  BernsteinModel model = make_model(cfg);
  SolveGrid grid;
  grid.t_max = cfg.get_double("t_max", 1.0);
  grid.nt = cfg.get_u64("nt", 33);
  grid.dx = cfg.get_double("dx", 0.05);
  if (cfg.has("x_min")) grid.x_min = cfg.get_double("x_min", 0.0);
  Boundary boundary = make_boundary(cfg, grid.t_max);
  BumpSpec initial = parse_bump(cfg.require("initial"));

  bool fd_only = cfg.get_u64("fd_only", 0) != 0 || !cfg.has("n_paths");
  std::size_t fd_nt = cfg.get_u64("fd_nt", grid.nt);

  SolveGrid fd_grid = grid;
  fd_grid.nt = fd_nt;
  double t0 = now_seconds();
  SolutionField fd = fd_solve(model, boundary, initial, fd_grid);
  std::printf("fd route: %zu x %zu nodes in %.1fs\n", fd.nt(), fd.nx(), now_seconds() - t0);

  CheckList checks;
  auto mp_check = [&](const char* name, const SolutionField& field, double extra) {
    double t1 = now_seconds();
    MaxPrincipleReport rep = max_principle_check(field, extra);
    checks.add(name, rep.pass_max && rep.pass_min, rep.summary, now_seconds() - t1);
  };
  mp_check("max_principle_fd", fd, 0.0);

  fs::path dir = output_dir(cfg);
  std::string prefix = cfg.get("prefix", "solve");
  std::string hash = experiment_hash(cfg);
  std::vector<std::string> stamp = {"config_hash=" + hash};
  write_field_csv((dir / (prefix + "_fd.csv")).string(), fd, stamp);

  JsonSidecar sc;
  sc.set("command", "solve");
  sc.set("config_hash", hash);
  sc.set("model_id", model.id());
  sc.set("boundary_id", boundary.id());
  sc.set("initial", initial.describe());

  if (!fd_only) {
    McConfig mc;
    mc.n_paths = cfg.get_u64("n_paths", 20000);
    mc.mesh = cfg.get_double("mesh", 1e-3);
    mc.seed = cfg.get_u64("seed", 1);
    mc.workers = int(cfg.get_u64("workers", 1));
    t0 = now_seconds();
    KernelEvaluator ev(model);
    SolutionField rep = solve_via_representation(ev, boundary, initial, grid, mc);
    std::printf("representation route: %zu x %zu nodes in %.1fs\n", rep.nt(), rep.nx(),
                now_seconds() - t0);
    mp_check("max_principle_rep", rep, cfg.get_double("rep_extra_tol", 5e-3));

    if ((fd.nt() - 1) % (rep.nt() - 1) != 0 || fd.nx() != rep.nx()) {
      throw std::invalid_argument("fd_nt - 1 must be a multiple of nt - 1 for route comparison");
    }
    std::size_t stride = (fd.nt() - 1) / (rep.nt() - 1);
    double sup = 0.0;
    for (std::size_t k = 0; k < rep.nt(); ++k) {
      for (std::size_t j = 0; j < rep.nx(); ++j) {
        sup = std::max(sup, std::fabs(rep.value(k, j) - fd.value(k * stride, j)));
      }
    }
    double tol = cfg.get_double("route_tol", 1e-2);
    checks.add("route_agreement", sup <= tol,
               "sup |fd - representation| = " + format_double(sup) + " vs " + format_double(tol));
    write_field_csv((dir / (prefix + "_rep.csv")).string(), rep, stamp);
    sc.set_number("route_sup_diff", sup);
  }

  if (cfg.has("initial2")) {
    BumpSpec second = parse_bump(cfg.require("initial2"));
    SolutionField fd2 = fd_solve(model, boundary, second, fd_grid);
    double t1 = now_seconds();
    DataContinuityReport dc = data_continuity_check(fd, fd2, initial, second);
    checks.add("data_continuity", dc.pass, dc.summary, now_seconds() - t1);
    write_field_csv((dir / (prefix + "_fd2.csv")).string(), fd2, stamp);
    sc.set("initial2", second.describe());
  }

  sc.set_raw("checks", checks.json());
  sc.write((dir / (prefix + ".json")).string());
  write_resolved_config(cfg, dir, prefix);
  std::printf("wrote %s/%s_*.csv\n", dir.string().c_str(), prefix.c_str());
  return checks.all_pass() ? 0 : 3;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const RunConfig& cfg) {
  BernsteinModel model = make_model(cfg);
  double t_max = cfg.get_double("t_max", 1.0);
  Boundary boundary = make_boundary(cfg, t_max);
  double x0 = cfg.get_double("x0", 0.0);
  if (!(x0 < boundary.value0())) {
    throw std::invalid_argument("x0 must start strictly below the boundary");
  }
  McConfig mc;
  mc.n_paths = cfg.get_u64("n_paths", 20000);
  mc.mesh = cfg.get_double("mesh", 1e-3);
  mc.seed = cfg.get_u64("seed", 1);
  mc.workers = int(cfg.get_u64("workers", 1));

  std::vector<double> t_eval =
      cfg.has("t") ? parse_list(cfg.require("t")) : linear_grid(t_max / 8.0, t_max, 8);
  if (!std::is_sorted(t_eval.begin(), t_eval.end()) || t_eval.front() <= 0.0 ||
      t_eval.back() > t_max * (1.0 + 1e-12)) {
    throw std::invalid_argument("eval times must be ascending inside (0, t_max]");
  }

  std::size_t detect = cfg.get_u64("detect_steps", 512);
  double t0 = now_seconds();
  CrossingLaw law =
      first_crossing(model, boundary, x0, linear_grid(0.0, t_max, detect + 1), mc);
  MsdEstimate est = msd_estimate(model, &boundary, x0, t_eval, mc);
  std::printf("simulated %llu paths twice in %.1fs (crossed fraction %.4f)\n",
              static_cast<unsigned long long>(mc.n_paths), now_seconds() - t0,
              law.crossed_fraction());

  fs::path dir = output_dir(cfg);
  std::string prefix = cfg.get("prefix", "simulate");
  std::string hash = experiment_hash(cfg);

  Csv out;
  out.comments = {"config_hash=" + hash};
  out.header = {"t", "survival", "msd", "msd_se", "alive_fraction"};
  out.columns.resize(5);
  for (std::size_t i = 0; i < t_eval.size(); ++i) {
    out.columns[0].push_back(t_eval[i]);
    out.columns[1].push_back(law.survival(t_eval[i]));
    out.columns[2].push_back(est.msd[i]);
    out.columns[3].push_back(est.se[i]);
    out.columns[4].push_back(est.alive_fraction[i]);
  }
  write_csv((dir / (prefix + "_estimates.csv")).string(), out);

  std::size_t keep = cfg.get_u64("keep_paths", 4);
  if (keep > 0) {
    SamplePaths paths =
        sample_paths(model, x0, linear_grid(0.0, t_max, 257), mc, keep);
    Csv pcsv;
    pcsv.comments = {"config_hash=" + hash};
    pcsv.header = {"path", "t", "L", "X"};
    pcsv.columns.resize(4);
    for (std::size_t p = 0; p < paths.L.size(); ++p) {
      for (std::size_t i = 0; i < paths.t.size(); ++i) {
        pcsv.columns[0].push_back(double(p));
        pcsv.columns[1].push_back(paths.t[i]);
        pcsv.columns[2].push_back(paths.L[p][i]);
        pcsv.columns[3].push_back(paths.X[p][i]);
      }
    }
    write_csv((dir / (prefix + "_paths.csv")).string(), pcsv);
  }

  JsonSidecar sc;
  sc.set("command", "simulate");
  sc.set("config_hash", hash);
  sc.set("model_id", model.id());
  sc.set("boundary_id", boundary.id());
  sc.set_number("n_paths", double(mc.n_paths));
  sc.set_number("seed", double(mc.seed));
  sc.set_number("mesh", mc.mesh);
  sc.set_number("workers", double(mc.workers));
  sc.set_number("crossed_fraction", law.crossed_fraction());
  sc.write((dir / (prefix + ".json")).string());
  write_resolved_config(cfg, dir, prefix);
  std::printf("wrote %s/%s_estimates.csv\n", dir.string().c_str(), prefix.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// msd

int cmd_msd(const RunConfig& cfg) {
  BernsteinModel model = make_model(cfg);
  double t_max = cfg.get_double("t_max", 100.0);
  std::vector<double> t_eval;
  if (cfg.has("t")) {
    t_eval = parse_list(cfg.require("t"));
  } else {
    double t_lo = cfg.get_double("t_lo", t_max / 100.0);
    t_eval = log_grid(t_lo, t_max, cfg.get_u64("n_eval", 9));
  }
  if (!std::is_sorted(t_eval.begin(), t_eval.end()) || t_eval.front() <= 0.0) {
    throw std::invalid_argument("eval times must be positive and ascending");
  }
  t_max = t_eval.back();

  std::optional<Boundary> boundary;
  if (cfg.has("boundary")) boundary = make_boundary(cfg, t_max);
  double x0 = cfg.get_double("x0", 0.0);
  if (boundary && !(x0 < boundary->value0())) {
    throw std::invalid_argument("x0 must start strictly below the boundary");
  }

  McConfig mc;
  mc.n_paths = cfg.get_u64("n_paths", 20000);
  mc.mesh = cfg.get_double("mesh", 0.01);
  mc.seed = cfg.get_u64("seed", 1);
  mc.workers = int(cfg.get_u64("workers", 1));

  double t0 = now_seconds();
  MsdEstimate est = msd_estimate(model, boundary ? &*boundary : nullptr, x0, t_eval, mc);
  std::printf("msd over %zu times, %llu paths in %.1fs\n", t_eval.size(),
              static_cast<unsigned long long>(mc.n_paths), now_seconds() - t0);

  Potential pot(model, t_max);
  std::optional<CrossingLaw> law;
  if (boundary && cfg.get_u64("formula", 0) != 0) {
    law = first_crossing(model, *boundary, x0, linear_grid(0.0, t_max, 513), mc);
  }

  Csv out;
  std::string hash = experiment_hash(cfg);
  out.comments = {"config_hash=" + hash};
  out.header = {"t", "msd", "se", "alive_fraction", "potential", "ratio"};
  out.columns.resize(law ? 7 : 6);
  if (law) out.header.push_back("msd_formula");
  for (std::size_t i = 0; i < t_eval.size(); ++i) {
    double t = t_eval[i];
    out.columns[0].push_back(t);
    out.columns[1].push_back(est.msd[i]);
    out.columns[2].push_back(est.se[i]);
    out.columns[3].push_back(est.alive_fraction[i]);
    out.columns[4].push_back(pot.value(t));
    out.columns[5].push_back(model.phi(1.0 / t) * est.msd[i]);
    if (law) out.columns[6].push_back(msd_formula(pot, *boundary, *law, t));
  }

  ScalingReport verdict = scaling_verdict(model, boundary ? &*boundary : nullptr, est);
  std::printf("%s\n", verdict.summary.c_str());

  fs::path dir = output_dir(cfg);
  std::string prefix = cfg.get("prefix", "msd");
  write_csv((dir / (prefix + "_series.csv")).string(), out);
  JsonSidecar sc;
  sc.set("command", "msd");
  sc.set("config_hash", hash);
  sc.set("model_id", model.id());
  if (boundary) sc.set("boundary_id", boundary->id());
  sc.set_number("n_paths", double(mc.n_paths));
  sc.set_number("gamma", verdict.gamma);
  sc.set_number("slope", verdict.slope);
  sc.set_number("band_lower", verdict.lower);
  sc.set_number("band_upper", verdict.upper);
  sc.set_number("slack", verdict.slack);
  sc.set_raw("conclusive", verdict.conclusive ? "true" : "false");
  sc.set_raw("band_pass", verdict.band_pass ? "true" : "false");
  sc.set("summary", verdict.summary);
  sc.write((dir / (prefix + ".json")).string());
  write_resolved_config(cfg, dir, prefix);
  std::printf("wrote %s/%s_series.csv\n", dir.string().c_str(), prefix.c_str());
  return (verdict.conclusive && !verdict.band_pass) ? 3 : 0;
}

// ---------------------------------------------------------------------------
// verify

int cmd_verify(const RunConfig& cfg) {
  bool quick = cfg.get_u64("quick", 0) != 0;
  RunConfig defaulted = cfg;
  if (!defaulted.has("model")) defaulted.kv["model"] = "stable:0.5";
  if (!defaulted.has("boundary")) defaulted.kv["boundary"] = "constant:1";
  BernsteinModel model = make_model(defaulted);

  McConfig mc;
  mc.n_paths = defaulted.get_u64("n_paths", quick ? 20000 : 100000);
  mc.mesh = defaulted.get_double("mesh", 1e-3);
  mc.seed = defaulted.get_u64("seed", 1);
  mc.workers = int(defaulted.get_u64("workers", 1));

  CheckList checks;
  auto engine = FourierEngine::shared(model);
  KernelEvaluator ev(model);

  {
    double t0 = now_seconds();
    RngStream pick(99, 0, 0);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      double z = 0.2 + 5.0 * pick.uniform53();
      double d = 0.1 + 3.0 * pick.uniform53();
      worst = std::max(worst, std::fabs(KernelEvaluator::bessel_identity_residual(d, z)));
    }
    checks.add("bessel_identity", worst <= 1e-8, rel_detail(worst, 1e-8), now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    double worst = 0.0;
    std::vector<double> lambdas = quick ? std::vector<double>{1.0} : std::vector<double>{0.5, 1.0, 2.0};
    for (double s : {0.25, 1.0}) {
      for (double lam : lambdas) {
        LaplacePair p = laplace_oracle_fL(*engine, s, lam, 40.0 / lam);
        worst = std::max(worst, std::fabs(p.numeric - p.analytic) / std::fabs(p.analytic));
      }
    }
    checks.add("laplace_inverse_density", worst <= 1e-3, rel_detail(worst, 1e-3),
               now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    double worst = 0.0;
    for (double lam : quick ? std::vector<double>{1.0} : std::vector<double>{0.5, 1.0, 2.0}) {
      LaplacePair p = ev.laplace_oracle(1.0, lam, 40.0 / lam);
      worst = std::max(worst, std::fabs(p.numeric - p.analytic) / std::fabs(p.analytic));
    }
    checks.add("laplace_kernel", worst <= 1e-3, rel_detail(worst, 1e-3), now_seconds() - t0);
  }

  Potential pot(model, 80.0);
  {
    double t0 = now_seconds();
    double worst = 0.0;
    for (double lam : quick ? std::vector<double>{1.0} : std::vector<double>{0.5, 1.0, 2.0}) {
      LaplacePair p = laplace_oracle_potential(pot, lam, 80.0);
      worst = std::max(worst, std::fabs(p.numeric - p.analytic) / std::fabs(p.analytic));
    }
    checks.add("laplace_potential", worst <= 1e-3, rel_detail(worst, 1e-3), now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    double worst = std::max(std::fabs(potential_renewal_check(pot, 0.5) - 1.0),
                            std::fabs(potential_renewal_check(pot, 5.0) - 1.0));
    checks.add("renewal_identity", worst <= 2e-3, rel_detail(worst, 2e-3), now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    double worst = ev.governing_residual(1.0, 0.0, 2.0, quick ? 64 : 128);
    if (!quick) worst = std::max(worst, ev.governing_residual(0.5, 0.0, 2.0, 128));
    checks.add("governing_kernel", worst <= 1e-2, rel_detail(worst, 1e-2), now_seconds() - t0);
  }

  if (!quick) {
    double t0 = now_seconds();
    double worst = governing_residual_fL(*engine, 1.0, 2.0, 128);
    checks.add("governing_inverse_density", worst <= 1e-2, rel_detail(worst, 1e-2),
               now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    int n_funcs = quick ? 25 : 100;
    int violations = 0;
    double worst = 0.0;
    RngStream pick(321, 0, 0);
    for (int f = 0; f < n_funcs; ++f) {
      // random trig polynomial on [0, 2] sampled on a uniform grid
      std::size_t n = 160;
      TimeGridFunction g;
      g.t0 = 0.0;
      g.dt = 2.0 / double(n);
      double a1 = 2.0 * pick.uniform53() - 1.0, a2 = 2.0 * pick.uniform53() - 1.0;
      double a3 = 2.0 * pick.uniform53() - 1.0, ph = 6.28 * pick.uniform53();
      for (std::size_t i = 0; i <= n; ++i) {
        double t = g.dt * double(i);
        g.values.push_back(a1 * std::sin(1.7 * t + ph) + a2 * std::cos(3.1 * t) +
                           a3 * std::sin(5.3 * t) * t);
      }
      ExtremalReport rep = extremal_sign_check(model, g);
      if (!rep.skipped && !rep.sign_ok) {
        ++violations;
        worst = std::min(worst, rep.value);
      }
    }
    checks.add("extremal_sign", violations == 0,
               std::to_string(violations) + " violations in " + std::to_string(n_funcs) +
                   " functions (worst " + format_double(worst) + ")",
               now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    double worst_z = 0.0;
    auto probe = [&](double level, std::vector<double> ts) {
      ReflectionEstimate r = reflection_estimate(model, level, ts, mc);
      for (std::size_t i = 0; i < r.t.size(); ++i) {
        double se = std::sqrt(r.se_sup[i] * r.se_sup[i] + r.se_tail[i] * r.se_tail[i]);
        worst_z = std::max(worst_z, std::fabs(r.p_sup[i] - r.p_twice_tail[i]) / se);
      }
    };
    if (quick) {
      probe(1.0, {1.0});
    } else {
      probe(0.5, {1.0});
      probe(1.0, {1.0, 2.0});
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "max |z| = %.2f vs 3 SE", worst_z);
    checks.add("reflection", worst_z <= 3.0, buf, now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    Boundary boundary = make_boundary(defaulted, 1.0);
    double x0 = defaulted.get_double("x0", 0.0);
    if (!(x0 < boundary.value0())) {
      throw std::invalid_argument("x0 must start strictly below the boundary");
    }
    double spread = 6.0 * std::sqrt(2.0 * pot.value(1.0));
    double x_min = x0 - spread;
    double x_max = boundary.value0();
    std::size_t bins = quick ? 20 : 40;
    KilledHistogram hist =
        killed_density_histogram(model, boundary, x0, 1.0, 512, x_min, x_max, bins, mc);
    CrossingLaw law;
    law.horizon = 1.0;
    law.n_paths = hist.n_paths;
    law.w = hist.w;
    law.boundary_id = boundary.name();
    law.start = x0;
    // per-bin mass of the formula via 5-node Simpson, splitting at the
    // density kink over the start point
    double width = (x_max - x_min) / double(bins);
    double worst = 0.0;
    for (std::size_t b = 0; b < bins; ++b) {
      double lo = x_min + width * double(b), hi = lo + width;
      std::vector<double> xs;
      auto add_panel = [&](double a, double c) {
        for (int i = 0; i <= 4; ++i) xs.push_back(a + (c - a) * double(i) / 4.0);
      };
      if (lo < x0 && x0 < hi) {
        add_panel(lo, x0);
        add_panel(x0, hi);
      } else {
        add_panel(lo, hi);
      }
      std::vector<double> q = dynkin_hunt_profile(ev, law, boundary, 1.0, xs);
      double mass = 0.0;
      for (std::size_t seg = 0; seg + 4 < xs.size(); seg += 5) {
        double h = (xs[seg + 4] - xs[seg]) / 4.0;
        mass += h / 3.0 *
                (q[seg] + 4.0 * q[seg + 1] + 2.0 * q[seg + 2] + 4.0 * q[seg + 3] + q[seg + 4]);
      }
      worst = std::max(worst, std::fabs(hist.mass[b] - mass));
    }
    double tol = 3.0 * (dkw_bound(mc.n_paths, 0.05) + 2e-3);
    char buf[96];
    std::snprintf(buf, sizeof buf, "max bin-mass diff %.3g vs %.3g", worst, tol);
    checks.add("dynkin_hunt", worst <= tol, buf, now_seconds() - t0);
  }

  {
    double t0 = now_seconds();
    McConfig a = mc, b = mc;
    a.n_paths = b.n_paths = 2000;
    a.workers = 1;
    b.workers = 4;
    Boundary boundary = make_boundary(defaulted, 1.0);
    auto grid = linear_grid(0.0, 1.0, 129);
    CrossingLaw la = first_crossing(model, boundary, 0.0, grid, a);
    CrossingLaw lb = first_crossing(model, boundary, 0.0, grid, b);
    bool same = la.w == lb.w;
    checks.add("determinism", same,
               same ? "1 vs 4 workers bit-identical" : "worker count changed the estimate",
               now_seconds() - t0);
  }

  fs::path dir = output_dir(cfg);
  std::string prefix = cfg.get("prefix", "verify");
  JsonSidecar sc;
  sc.set("command", "verify");
  sc.set("config_hash", experiment_hash(cfg));
  sc.set("model_id", model.id());
  sc.set_raw("quick", quick ? "true" : "false");
  sc.set_number("n_paths", double(mc.n_paths));
  sc.set_raw("all_pass", checks.all_pass() ? "true" : "false");
  sc.set_raw("checks", checks.json());
  sc.write((dir / (prefix + ".json")).string());
  write_resolved_config(cfg, dir, prefix);
  std::printf("%zu check(s) failed\n", checks.fail_count());
  return checks.all_pass() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"non-local diffusion toolkit: densities, killed solver, path simulation"};
  app.require_subcommand(1);

  std::function<int()> job;
  auto wire = [&](CLI::App* sub, int (*fn)(const RunConfig&), CommonFlags* common) {
    sub->add_option("--config", common->config_path, "key-value config file");
    sub->add_option("--set", common->sets, "override: key=value (repeatable)");
    sub->callback([&, fn, common] { job = [fn, common] { return fn(resolve_config(*common)); }; });
  };
  auto opt = [](CLI::App* sub, CommonFlags* common, const std::string& flag,
                const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(
        "--" + flag, [common, key](const std::string& v) { common->flags.emplace_back(key, v); },
        help);
  };
  auto toggle = [](CLI::App* sub, CommonFlags* common, const std::string& flag,
                   const std::string& key, const std::string& help) {
    sub->add_flag_callback(
        "--" + flag, [common, key] { common->flags.emplace_back(key, "1"); }, help);
  };

  static CommonFlags density_flags, solve_flags, simulate_flags, msd_flags, verify_flags;

  CLI::App* density = app.add_subcommand("density", "tabulate the inverse-process density");
  wire(density, cmd_density, &density_flags);
  opt(density, &density_flags, "model", "model", "stable:b | relativistic:b,m | tabulated:csv");
  opt(density, &density_flags, "t", "t", "comma list of evaluation times");
  opt(density, &density_flags, "s-max", "s_max", "upper end of the operational-time grid");
  opt(density, &density_flags, "n-s", "n_s", "number of s nodes");
  opt(density, &density_flags, "s", "s", "explicit comma list of s nodes");
  opt(density, &density_flags, "route", "route", "auto | series | fourier");
  opt(density, &density_flags, "out", "out", "output directory");

  CLI::App* solve = app.add_subcommand("solve", "killed initial-value problem, both routes");
  wire(solve, cmd_solve, &solve_flags);
  opt(solve, &solve_flags, "model", "model", "model spec");
  opt(solve, &solve_flags, "boundary", "boundary", "constant:c | saturating:a,b,l | pwl:csv");
  opt(solve, &solve_flags, "initial", "initial", "cosine:c,w,h | triangle:c,w,h");
  opt(solve, &solve_flags, "t-max", "t_max", "horizon");
  opt(solve, &solve_flags, "nt", "nt", "output time nodes (representation route)");
  opt(solve, &solve_flags, "fd-nt", "fd_nt", "time nodes for the difference scheme");
  opt(solve, &solve_flags, "dx", "dx", "lattice spacing");
  opt(solve, &solve_flags, "n-paths", "n_paths", "MC paths (enables the representation route)");
  opt(solve, &solve_flags, "seed", "seed", "RNG seed");
  opt(solve, &solve_flags, "out", "out", "output directory");
  toggle(solve, &solve_flags, "fd-only", "fd_only", "skip the Monte Carlo route");

  CLI::App* simulate = app.add_subcommand("simulate", "path ensemble and crossing estimates");
  wire(simulate, cmd_simulate, &simulate_flags);
  opt(simulate, &simulate_flags, "model", "model", "model spec");
  opt(simulate, &simulate_flags, "boundary", "boundary", "boundary spec");
  opt(simulate, &simulate_flags, "n-paths", "n_paths", "path count");
  opt(simulate, &simulate_flags, "mesh", "mesh", "subordinator step");
  opt(simulate, &simulate_flags, "seed", "seed", "RNG seed");
  opt(simulate, &simulate_flags, "workers", "workers", "worker threads");
  opt(simulate, &simulate_flags, "t-max", "t_max", "horizon");
  opt(simulate, &simulate_flags, "t", "t", "comma list of estimate times");
  opt(simulate, &simulate_flags, "out", "out", "output directory");

  CLI::App* msd = app.add_subcommand("msd", "mean squared displacement and scaling verdict");
  wire(msd, cmd_msd, &msd_flags);
  opt(msd, &msd_flags, "model", "model", "model spec");
  opt(msd, &msd_flags, "boundary", "boundary", "optional absorbing boundary");
  opt(msd, &msd_flags, "n-paths", "n_paths", "path count");
  opt(msd, &msd_flags, "mesh", "mesh", "subordinator step");
  opt(msd, &msd_flags, "seed", "seed", "RNG seed");
  opt(msd, &msd_flags, "t-lo", "t_lo", "first eval time");
  opt(msd, &msd_flags, "t-max", "t_max", "last eval time");
  opt(msd, &msd_flags, "n-eval", "n_eval", "log-spaced eval count");
  opt(msd, &msd_flags, "out", "out", "output directory");
  toggle(msd, &msd_flags, "formula", "formula", "also evaluate the crossing-measure formula");

  CLI::App* verify = app.add_subcommand("verify", "invariant battery with one summary");
  wire(verify, cmd_verify, &verify_flags);
  opt(verify, &verify_flags, "model", "model", "model spec (default stable:0.5)");
  opt(verify, &verify_flags, "boundary", "boundary", "boundary spec (default constant:1)");
  opt(verify, &verify_flags, "n-paths", "n_paths", "path count for the MC checks");
  opt(verify, &verify_flags, "mesh", "mesh", "subordinator step");
  opt(verify, &verify_flags, "out", "out", "output directory");
  toggle(verify, &verify_flags, "quick", "quick", "reduced battery");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return job ? job() : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config/validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
