#include "subdiff/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace subdiff {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(const char* f, double a, double b = 0, double c = 0, int n = 1) {
  char buf[160];
  if (n == 1)
    std::snprintf(buf, sizeof buf, f, a);
  else
    std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

}  // namespace

Boundary Boundary::constant(double c) {
  if (!(c > 0.0)) throw std::invalid_argument("boundary: constant level must be > 0");
  Boundary b;
  b.kind_ = ConstantBoundary{c};
  b.name_ = fmt("Constant(%g)", c);
  b.id_ = fmt("constant:%.17g", c);
  return b;
}

Boundary Boundary::saturating_affine(double a, double bb, double l) {
  if (!(a > 0.0)) throw std::invalid_argument("boundary: phi(0) must be > 0");
  if (bb < 0.0) throw std::invalid_argument("boundary: slope must be >= 0");
  if (!(l >= a)) throw std::invalid_argument("boundary: cap must be >= phi(0)");
  Boundary b;
  b.kind_ = SaturatingAffineBoundary{a, bb, l};
  b.name_ = fmt("SaturatingAffine(%g,%g,%g)", a, bb, l, 3);
  b.id_ = fmt("saturating:%.17g,%.17g,%.17g", a, bb, l, 3);
  return b;
}

Boundary Boundary::piecewise_linear(std::vector<double> t, std::vector<double> v,
                                    TerminalBehavior terminal) {
  if (t.size() != v.size() || t.size() < 2)
    throw std::invalid_argument("boundary: need >= 2 knots with matching sizes");
  if (t.front() != 0.0) throw std::invalid_argument("boundary: first knot must be at t=0");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw std::invalid_argument("boundary: knot times must increase");
  if (!(v.front() > 0.0)) throw std::invalid_argument("boundary: phi(0) must be > 0");
  Boundary b;
  std::size_t n = t.size();
  double t0 = t.front(), tn = t.back(), v0 = v.front(), vn = v.back();
  b.kind_ = PiecewiseLinearBoundary{std::move(t), std::move(v), terminal};
  b.name_ = "PiecewiseLinear(" + std::to_string(n) + " knots)";
  char buf[200];
  std::snprintf(buf, sizeof buf, "pwl:%zu:%.17g,%.17g,%.17g,%.17g:%s", n, t0, v0, tn, vn,
                terminal == TerminalBehavior::Flat ? "flat" : "extend");
  b.id_ = buf;
  return b;
}

double Boundary::eval(double t) const {
  if (t < 0.0) throw std::domain_error("boundary: t must be >= 0");
  if (auto* c = as_constant()) return c->c;
  if (auto* a = as_affine()) return std::min(a->a + a->b * t, a->l);
  const auto& p = *as_pwl();
  if (t >= p.t.back()) {
    if (p.terminal == TerminalBehavior::Flat) return p.v.back();
    std::size_t n = p.t.size();
    double slope = (p.v[n - 1] - p.v[n - 2]) / (p.t[n - 1] - p.t[n - 2]);
    return p.v.back() + slope * (t - p.t.back());
  }
  std::size_t i = std::upper_bound(p.t.begin(), p.t.end(), t) - p.t.begin();
  if (i == 0) return p.v.front();
  double w = (t - p.t[i - 1]) / (p.t[i] - p.t[i - 1]);
  return p.v[i - 1] + w * (p.v[i] - p.v[i - 1]);
}

BoundaryReport Boundary::validate(double horizon) const {
  if (!(horizon > 0.0)) throw std::invalid_argument("boundary validate: horizon must be > 0");
  BoundaryReport r;
  if (auto* c = as_constant()) {
    r.a2a = r.a2b = r.a2c = r.a2d = true;
    r.lipschitz = 0.0;
    r.sup_value = c->c;
    return r;
  }
  if (auto* a = as_affine()) {
    r.a2a = true;
    r.a2b = true;  // strictly increasing until the cap, flat after
    r.a2c = true;
    r.a2d = true;
    r.lipschitz = a->b;
    r.sup_value = (a->b > 0.0) ? a->l : a->a;
    return r;
  }
  const auto& p = *as_pwl();
  const std::size_t n = p.t.size();
  r.a2a = true;
  for (std::size_t i = 1; i < n; ++i)
    if (p.v[i] < p.v[i - 1]) r.a2a = false;

  // a2b: once two knots share a value, everything after (including the
  // terminal continuation) must stay at that value
  r.a2b = true;
  bool flat_seen = false;
  for (std::size_t i = 1; i < n; ++i) {
    bool seg_flat = p.v[i] == p.v[i - 1];
    if (flat_seen && !seg_flat) r.a2b = false;
    if (seg_flat) flat_seen = true;
  }
  if (flat_seen && p.terminal == TerminalBehavior::ExtendSlope &&
      p.v[n - 1] != p.v[n - 2])
    r.a2b = false;

  double last_slope = (p.v[n - 1] - p.v[n - 2]) / (p.t[n - 1] - p.t[n - 2]);
  bool grows = p.terminal == TerminalBehavior::ExtendSlope && last_slope > 0.0;
  r.a2c = !grows;
  r.sup_value = grows ? kInf : *std::max_element(p.v.begin(), p.v.end());

  double lip = 0.0;
  for (std::size_t i = 1; i < n; ++i) {
    if (p.t[i - 1] >= horizon) break;
    lip = std::max(lip, std::fabs(p.v[i] - p.v[i - 1]) / (p.t[i] - p.t[i - 1]));
  }
  if (horizon > p.t.back() && p.terminal == TerminalBehavior::ExtendSlope)
    lip = std::max(lip, std::fabs(last_slope));
  r.lipschitz = lip;
  r.a2d = std::isfinite(lip);
  return r;
}

std::optional<double> Boundary::first_hit_level(double x) const {
  BoundaryReport r = validate(1.0);
  if (!r.a2a || !r.a2b)
    throw std::invalid_argument("first_hit_level: boundary violates a2a/a2b");
  if (auto* c = as_constant()) {
    if (x == c->c) return 0.0;
    return std::nullopt;
  }
  if (auto* a = as_affine()) {
    if (x < a->a) return std::nullopt;
    if (a->b == 0.0) return (x == a->a) ? std::optional<double>(0.0) : std::nullopt;
    double cap = std::min(a->l, kInf);
    if (x > cap) return std::nullopt;
    return (x - a->a) / a->b;
  }
  const auto& p = *as_pwl();
  if (x < p.v.front()) return std::nullopt;
  if (x == p.v.front()) return 0.0;
  const std::size_t n = p.t.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (x <= p.v[i]) {
      double dv = p.v[i] - p.v[i - 1];
      if (dv == 0.0) return p.t[i - 1];  // only reachable when x == the flat value
      return p.t[i - 1] + (x - p.v[i - 1]) / dv * (p.t[i] - p.t[i - 1]);
    }
  }
  if (p.terminal == TerminalBehavior::ExtendSlope) {
    double slope = (p.v[n - 1] - p.v[n - 2]) / (p.t[n - 1] - p.t[n - 2]);
    if (slope > 0.0) return p.t.back() + (x - p.v.back()) / slope;
  }
  return std::nullopt;
}

std::optional<double> Boundary::sup() const {
  double s = validate(1.0).sup_value;
  if (std::isfinite(s)) return s;
  return std::nullopt;
}

Boundary parse_boundary(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("boundary spec needs 'kind:params', got: " + text);
  std::string kind = text.substr(0, colon), rest = text.substr(colon + 1);
  if (kind == "constant") return Boundary::constant(std::stod(rest));
  if (kind == "saturating") {
    double a, b, l;
    char c1, c2;
    std::istringstream ss(rest);
    if (!(ss >> a >> c1 >> b >> c2 >> l) || c1 != ',' || c2 != ',')
      throw std::invalid_argument("saturating needs 'a,b,l': " + text);
    return Boundary::saturating_affine(a, b, l);
  }
  if (kind == "pwl") {
    TerminalBehavior term = TerminalBehavior::Flat;
    std::string path = rest;
    auto suffix = rest.rfind(":extend");
    if (suffix != std::string::npos && suffix == rest.size() - 7) {
      term = TerminalBehavior::ExtendSlope;
      path = rest.substr(0, suffix);
    }
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open boundary table: " + path);
    std::vector<double> t, v;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ss(line);
      double a, b;
      if (!(ss >> a >> b)) continue;  // tolerate header
      t.push_back(a);
      v.push_back(b);
    }
    return Boundary::piecewise_linear(std::move(t), std::move(v), term);
  }
  throw std::invalid_argument("unknown boundary kind: " + kind);
}

}  // namespace subdiff
