#include "subdiff/nonlocal_op.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace subdiff {

TimeGridFunction TimeGridFunction::from_samples(const std::vector<double>& t,
                                                const std::vector<double>& v) {
  if (t.size() != v.size() || t.size() < 2)
    throw std::invalid_argument("TimeGridFunction: need >= 2 matching samples");
  TimeGridFunction f;
  f.t0 = t.front();
  f.dt = (t.back() - t.front()) / double(t.size() - 1);
  if (!(f.dt > 0.0)) throw std::invalid_argument("TimeGridFunction: grid must increase");
  for (std::size_t i = 0; i < t.size(); ++i) {
    double expected = f.t0 + f.dt * double(i);
    if (std::fabs(t[i] - expected) > 1e-12 * std::max(1.0, std::fabs(expected)))
      throw std::invalid_argument("TimeGridFunction: grid is not uniform");
  }
  f.values = v;
  return f;
}

std::vector<double> memory_weights(const BernsteinModel& model, double dt, std::size_t count) {
  if (!(dt > 0.0)) throw std::invalid_argument("memory_weights: dt must be > 0");
  std::vector<double> a(count + 1, 0.0);  // 1-based
  for (std::size_t i = 1; i <= count; ++i)
    a[i] = model.tail_mass(double(i - 1) * dt, double(i) * dt);
  return a;
}

double apply_nonlocal_derivative(const std::vector<double>& weights,
                                 const TimeGridFunction& f, std::size_t k) {
  if (k == 0 || k >= f.values.size())
    throw std::out_of_range("apply_nonlocal_derivative: k out of range");
  if (weights.size() <= k)
    throw std::invalid_argument("apply_nonlocal_derivative: weights too short");
  double acc = 0.0;
  for (std::size_t j = 0; j < k; ++j)
    acc += (f.values[j + 1] - f.values[j]) * weights[k - j];
  return acc / f.dt;
}

double apply_nonlocal_derivative(const BernsteinModel& model, const TimeGridFunction& f,
                                 std::size_t k) {
  auto w = memory_weights(model, f.dt, k);
  return apply_nonlocal_derivative(w, f, k);
}

ExtremalReport extremal_sign_check(const BernsteinModel& model, const TimeGridFunction& f) {
  ExtremalReport r;
  auto it = std::max_element(f.values.begin(), f.values.end());
  r.argmax_index = std::size_t(it - f.values.begin());
  if (r.argmax_index == 0) {
    r.skipped = true;
    r.sign_ok = true;
    return r;
  }
  r.value = apply_nonlocal_derivative(model, f, r.argmax_index);
  double scale = 0.0;
  for (double v : f.values) scale = std::max(scale, std::fabs(v));
  if (scale == 0.0) scale = 1.0;
  r.sign_ok = r.value >= -1e-8 * scale;
  return r;
}

}  // namespace subdiff
