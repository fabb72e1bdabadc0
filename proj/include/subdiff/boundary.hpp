#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace subdiff {

struct ConstantBoundary {
  double c;
};

// phi(t) = min(a + b t, l)
struct SaturatingAffineBoundary {
  double a, b, l;
};

enum class TerminalBehavior { Flat, ExtendSlope };

// nondecreasing piecewise-linear interpolation of (t, v) knots; past the last
// knot either stays flat or continues the final slope
struct PiecewiseLinearBoundary {
  std::vector<double> t, v;
  TerminalBehavior terminal = TerminalBehavior::Flat;
};

// Structural validation of the standing boundary assumptions: nondecreasing
// (a2a), strictly-increasing-until-flat (a2b), bounded (a2c), Lipschitz on
// the horizon (a2d, with the constant reported).
struct BoundaryReport {
  bool a2a = false, a2b = false, a2c = false, a2d = false;
  double lipschitz = 0.0;
  double sup_value = 0.0;  // +inf when unbounded
};

class Boundary {
 public:
  static Boundary constant(double c);
  static Boundary saturating_affine(double a, double b, double l);
  static Boundary piecewise_linear(std::vector<double> t, std::vector<double> v,
                                   TerminalBehavior terminal = TerminalBehavior::Flat);

  double eval(double t) const;
  double value0() const { return eval(0.0); }
  BoundaryReport validate(double horizon) const;

  // Earliest w with phi(w) == x. Requires a2a && a2b (throws otherwise).
  // Empty when x is never attained.
  std::optional<double> first_hit_level(double x) const;

  // finite sup over [0, inf) when bounded
  std::optional<double> sup() const;

  bool is_constant() const { return std::holds_alternative<ConstantBoundary>(kind_); }
  const ConstantBoundary* as_constant() const { return std::get_if<ConstantBoundary>(&kind_); }
  const SaturatingAffineBoundary* as_affine() const {
    return std::get_if<SaturatingAffineBoundary>(&kind_);
  }
  const PiecewiseLinearBoundary* as_pwl() const {
    return std::get_if<PiecewiseLinearBoundary>(&kind_);
  }

  const std::string& name() const { return name_; }
  const std::string& id() const { return id_; }

 private:
  Boundary() = default;
  std::variant<ConstantBoundary, SaturatingAffineBoundary, PiecewiseLinearBoundary> kind_;
  std::string name_, id_;
};

// "constant:1.0", "saturating:0.5,0.1,2.0", "pwl:<csv path>" (optionally
// ":extend" suffix for extend-slope terminal). The CSV has columns t,phi.
Boundary parse_boundary(const std::string& text);

}  // namespace subdiff
