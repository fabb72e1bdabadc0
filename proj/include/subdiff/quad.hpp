#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace subdiff {

struct QuadOpts {
    double rel_tol = 1e-8;
    double abs_tol = 1e-12;
    int max_depth = 12;
};

// Adaptive Gauss-Kronrod 15 on a finite interval.
template <class F>
double gk_integrate(F&& f, double a, double b, const QuadOpts& q = {}) {
    if (a == b) return 0.0;
    double err = 0.0;
    double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, q.max_depth, q.rel_tol, &err);
    return v;
}

// Semi-infinite [a, inf) for integrands with eventual exponential-type decay.
template <class F>
double exp_sinh_integrate(F&& f, double a, const QuadOpts& q = {}) {
    boost::math::quadrature::exp_sinh<double> es;
    double err = 0.0, l1 = 0.0;
    return es.integrate(f, a, std::numeric_limits<double>::infinity(), q.rel_tol, &err, &l1);
}

// Finite interval with integrable endpoint singularities.
template <class F>
double tanh_sinh_integrate(F&& f, double a, double b, const QuadOpts& q = {}) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, a, b, q.rel_tol);
}

}  // namespace subdiff
