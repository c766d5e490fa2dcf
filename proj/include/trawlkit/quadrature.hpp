// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/quadrature.hpp
//! Thin wrappers over Boost.Math quadrature.
#pragma once

#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "errors.hpp"

namespace trawlkit
{
struct QuadResult
{
    double value{0};
    double error{0};
};

//! Adaptive Gauss-Kronrod on a finite interval
template<class F>
QuadResult integrate(F&& f, double a, double b, double tol = 1e-12, unsigned depth = 18)
{
    if (a == b)
        return {};
    double err = 0;
    double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, a, b, depth, tol, &err);
    return {v, err};
}

//! Integral over (-inf, b], mapped onto (0, 1] with t = b + 1 - 1/u
template<class F>
QuadResult integrate_lower_tail(F&& f, double b, double tol = 1e-12)
{
    auto g = [&](double u) {
        double t = b + 1 - 1 / u;
        double v = f(t);
        if (v == 0)
            return 0.0;
        double r = v / u / u;
        return std::isfinite(r) ? r : 0.0;
    };
    static thread_local boost::math::quadrature::tanh_sinh<double> ts(12);
    double err = 0;
    double l1 = 0;
    double v = ts.integrate(g, 0.0, 1.0, tol, &err, &l1);
    return {v, err};
}

//! Integral over [a, inf), mapped with t = a - 1 + 1/u
template<class F>
QuadResult integrate_upper_tail(F&& f, double a, double tol = 1e-12)
{
    return integrate_lower_tail([&](double s) { return f(-s); }, -a, tol);
}

}  // namespace trawlkit
