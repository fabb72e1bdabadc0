#pragma once

#include <cstddef>
#include <vector>

#include "subdiff/bernstein.hpp"

namespace subdiff {

// Function sampled on a uniform time grid starting at t0.
struct TimeGridFunction {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> values;

  static TimeGridFunction from_samples(const std::vector<double>& t,
                                       const std::vector<double>& v);
  double time_at(std::size_t k) const { return t0 + dt * double(k); }
};

// Memory weights a_i = int_{(i-1)dt}^{i dt} levy_tail, i = 1..count. The
// singular panel i=1 is exact, so no quadrature error enters at the kernel's
// origin.
std::vector<double> memory_weights(const BernsteinModel& model, double dt, std::size_t count);

// Product-integration evaluation of the nonlocal derivative at grid node k:
//   (d/dt)^phi f(t_k) ~= sum_{j<k} (f_{j+1}-f_j)/dt * a_{k-j}
// using the Lipschitz form of the operator (tail kernel against f').
double apply_nonlocal_derivative(const BernsteinModel& model, const TimeGridFunction& f,
                                 std::size_t k);

// Same, but with weights precomputed for the grid (avoids re-deriving them
// when sweeping k).
double apply_nonlocal_derivative(const std::vector<double>& weights,
                                 const TimeGridFunction& f, std::size_t k);

// Sign of the nonlocal derivative at the grid argmax of f: at an interior
// maximum the operator must be nonnegative. skipped is set when the argmax
// sits at k=0 where the statement is void.
struct ExtremalReport {
  std::size_t argmax_index = 0;
  double value = 0.0;
  bool sign_ok = false;
  bool skipped = false;
};

ExtremalReport extremal_sign_check(const BernsteinModel& model, const TimeGridFunction& f);

}  // namespace subdiff
