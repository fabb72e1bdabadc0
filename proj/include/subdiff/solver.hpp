#pragma once

// Killed transition density via the crossing-measure correction, the Dirichlet
// problem on the moving domain {x < phi(t)} by two independent routes (kernel
// representation vs implicit finite differences), and the well-posedness
// property checks (maximum principle, initial-data continuity).

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "subdiff/bernstein.hpp"
#include "subdiff/boundary.hpp"
#include "subdiff/heatkernel.hpp"
#include "subdiff/mc.hpp"

namespace subdiff {

// compactly supported initial datum, parametrized for config files
struct BumpSpec {
  enum class Shape { Cosine, Triangle };
  Shape shape = Shape::Cosine;
  double center = -1.0;
  double width = 1.0;  // full support width
  double height = 1.0;

  double eval(double x) const;
  double support_lo() const { return center - 0.5 * width; }
  double support_hi() const { return center + 0.5 * width; }
  std::string describe() const;
};

// "cosine:center,width,height" or "triangle:center,width,height"
BumpSpec parse_bump(const std::string& text);

struct SolutionField {
  std::vector<double> t_grid;  // uniform from 0
  std::vector<double> x_grid;  // uniform lattice anchored at phi(0)
  std::vector<double> u;       // row-major [it * nx + ix]
  std::string boundary_id;
  std::string initial_id;

  std::size_t nt() const { return t_grid.size(); }
  std::size_t nx() const { return x_grid.size(); }
  double value(std::size_t it, std::size_t ix) const { return u[it * nx() + ix]; }
  double& at(std::size_t it, std::size_t ix) { return u[it * nx() + ix]; }
};

struct SolveGrid {
  double t_max = 1.0;
  std::size_t nt = 33;  // time nodes including t = 0
  double dx = 0.05;
  // left truncation; NaN selects phi(0) - 12 sqrt(2 U(t_max)), snapped to the
  // lattice anchored at phi(0)
  double x_min = std::numeric_limits<double>::quiet_NaN();
};

// q(t, x; y) = p(t, x; y) - (1/n) sum over crossing samples w <= t of
// p(t - w, x; phi(w)); small negatives are clamped to zero and the clamped
// magnitude is reported through clamp_mag when given.
// Requires law.boundary_id / law.start to match boundary and y.
double dynkin_hunt_q(const KernelEvaluator& ev, const CrossingLaw& law, const Boundary& boundary,
                     double t, double x, double y, double* clamp_mag = nullptr);

// same q at many x nodes, with the crossing samples folded into n_wbins
// uniform time bins first; the binned correction keeps the kernel memo small
// when x and the sample count are both large
std::vector<double> dynkin_hunt_profile(const KernelEvaluator& ev, const CrossingLaw& law,
                                        const Boundary& boundary, double t,
                                        const std::vector<double>& x,
                                        std::size_t n_wbins = 512);

// kernel-representation route: u(t,x) = int q(t,x;y) f(y) dy with Simpson
// y-quadrature on the lattice; constant boundaries reuse one multi-level
// crossing ensemble by spatial homogeneity, general boundaries run one
// crossing ensemble per y node
SolutionField solve_via_representation(const KernelEvaluator& ev, const Boundary& boundary,
                                       const BumpSpec& f, const SolveGrid& grid,
                                       const McConfig& cfg);

// implicit product-integration scheme: at each step the newest level couples
// through the first memory weight and a tridiagonal half-Laplacian solve;
// exterior nodes x >= phi(t_k) and the x_min node are pinned to zero
SolutionField fd_solve(const BernsteinModel& model, const Boundary& boundary, const BumpSpec& f,
                       const SolveGrid& grid);

struct MaxPrincipleReport {
  double interior_max = 0.0, parabolic_max = 0.0;  // u
  double interior_min = 0.0, parabolic_min = 0.0;  // for the -u side
  double scale = 0.0;                              // max |initial row|
  double tolerance = 0.0;                          // 1e-6 * scale + extra
  bool pass_max = false, pass_min = false;
  std::size_t argmax_it = 0, argmax_ix = 0;
  std::string summary;
};

// interior extrema against the parabolic boundary (initial row and the
// exterior zeros); extra_tol covers MC noise on the representation route
MaxPrincipleReport max_principle_check(const SolutionField& field, double extra_tol = 0.0);

struct DataContinuityReport {
  double sup_diff_u = 0.0;
  double sup_diff_f = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string summary;
};

// sup |u1 - u2| <= sup |f1 - f2| + tolerance on shared grids
DataContinuityReport data_continuity_check(const SolutionField& a, const SolutionField& b,
                                           const BumpSpec& fa, const BumpSpec& fb,
                                           double extra_tol = 0.0);

// max jump of y -> q(t, x; y) across adjacent nodes of y_grid; the flag
// compares against 4x the supplied noise scale
struct YContinuityReport {
  double max_jump = 0.0;
  double noise_scale = 0.0;
  bool flagged = false;
  std::vector<double> q;  // q at the y nodes
};
YContinuityReport y_continuity_smoke(const KernelEvaluator& ev, const Boundary& boundary,
                                     double t, double x, const std::vector<double>& y_grid,
                                     const McConfig& cfg, double noise_scale);

}  // namespace subdiff
