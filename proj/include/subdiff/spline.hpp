#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace subdiff {

// Natural cubic spline on a strictly increasing abscissa grid.
class CubicSpline {
 public:
  CubicSpline() = default;

  CubicSpline(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3 || y_.size() != n) throw std::invalid_argument("CubicSpline: need >= 3 nodes");
    for (std::size_t i = 1; i < n; ++i)
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("CubicSpline: x not increasing");

    // Solve for second derivatives m with natural end conditions.
    m_.assign(n, 0.0);
    std::vector<double> diag(n, 1.0), rhs(n, 0.0), sub(n, 0.0), sup(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      double hl = x_[i] - x_[i - 1], hr = x_[i + 1] - x_[i];
      sub[i] = hl / 6.0;
      diag[i] = (hl + hr) / 3.0;
      sup[i] = hr / 6.0;
      rhs[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
    }
    for (std::size_t i = 1; i < n; ++i) {
      double w = sub[i] / diag[i - 1];
      diag[i] -= w * sup[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    m_[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
  }

  bool empty() const { return x_.empty(); }
  double x_front() const { return x_.front(); }
  double x_back() const { return x_.back(); }
  double y_front() const { return y_.front(); }
  double y_back() const { return y_.back(); }

  double eval(double x) const {
    std::size_t i = locate(x);
    double h = x_[i + 1] - x_[i], a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  double deriv(double x) const {
    std::size_t i = locate(x);
    double h = x_[i + 1] - x_[i], a = (x_[i + 1] - x) / h, b = (x - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           h / 6.0 * ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]);
  }

 private:
  std::size_t locate(double x) const {
    std::size_t lo = 0, hi = x_.size() - 1;
    if (x <= x_[0]) return 0;
    if (x >= x_[hi]) return hi - 1;
    while (hi - lo > 1) {
      std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= x ? lo : hi) = mid;
    }
    return lo;
  }

  std::vector<double> x_, y_, m_;
};

}  // namespace subdiff
