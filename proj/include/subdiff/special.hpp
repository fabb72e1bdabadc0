#pragma once

#include <cstddef>
#include <vector>

namespace subdiff {

// Upper incomplete gamma Γ(a, x) for x > 0 and any real a (entire in a).
// Boost covers a > 0; a <= 0 is reached by downward recurrence
//   Γ(a, x) = (Γ(a+1, x) - x^a e^{-x}) / a,
// with the a == 0 rung replaced by E₁(x), where the recurrence divides by zero.
double upper_gamma(double a, double x);

// Lower incomplete gamma γ(a, x), a > 0, x >= 0.
double lower_gamma(double a, double x);

// 1/Γ(x), finite everywhere (zero at non-positive integer x).
double rgamma(double x);

// Compensated accumulator for long alternating sums.
class KahanSum {
public:
    void add(double v) {
        double y = v - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

// Ordinary least squares slope/intercept of y against x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// log-spaced grid, n >= 2 points from a to b inclusive, a,b > 0.
std::vector<double> log_grid(double a, double b, std::size_t n);

// uniform grid, n >= 2 points from a to b inclusive.
std::vector<double> linear_grid(double a, double b, std::size_t n);

}  // namespace subdiff
