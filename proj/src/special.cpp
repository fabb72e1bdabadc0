#include "subdiff/special.hpp"

#include <boost/math/special_functions/expint.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <stdexcept>

namespace subdiff {

double upper_gamma(double a, double x) {
    if (!(x > 0.0)) {
        if (x == 0.0 && a > 0.0) return std::tgamma(a);
        throw std::domain_error("upper_gamma: requires x > 0 (or a > 0 at x = 0)");
    }
    if (a > 0.0) return boost::math::tgamma(a, x);

    // Climb to the first base point a + k in (0, 1]; E₁ replaces the a == 0 rung.
    int k = static_cast<int>(std::ceil(-a));
    double base = a + k;
    double g = (base == 0.0) ? boost::math::expint(1, x) : boost::math::tgamma(base, x);
    // Descend: Γ(b-1, x) = (Γ(b, x) - x^{b-1} e^{-x}) / (b - 1).
    for (int i = 1; i <= k; ++i) {
        double b1 = base - i;  // target index of this step
        if (b1 == 0.0) {
            g = boost::math::expint(1, x);
            continue;
        }
        g = (g - std::pow(x, b1) * std::exp(-x)) / b1;
    }
    return g;
}

double lower_gamma(double a, double x) {
    if (!(a > 0.0)) throw std::domain_error("lower_gamma: requires a > 0");
    if (!(x >= 0.0)) throw std::domain_error("lower_gamma: requires x >= 0");
    if (x == 0.0) return 0.0;
    return boost::math::tgamma_lower(a, x);
}

double rgamma(double x) {
    if (x <= 0.0 && x == std::floor(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("fit_line: need two equal-length samples");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
    LineFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
    return f;
}

std::vector<double> log_grid(double a, double b, std::size_t n) {
    if (!(a > 0.0) || !(b > a) || n < 2) throw std::invalid_argument("log_grid: bad range");
    std::vector<double> g(n);
    double la = std::log(a), lb = std::log(b);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1));
    g.front() = a;
    g.back() = b;
    return g;
}

std::vector<double> linear_grid(double a, double b, std::size_t n) {
    if (!(b > a) || n < 2) throw std::invalid_argument("linear_grid: bad range");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i)
        g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    g.front() = a;
    g.back() = b;
    return g;
}

}  // namespace subdiff
