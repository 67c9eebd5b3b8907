#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include <hsps/errors.hpp>

namespace hsps::roots {

struct Root
{
    double x = 0;
    double fx = 0;
    int iterations = 0;
};

struct BisectOptions
{
    /// Stop once |f(x)| falls below this.
    double f_tolerance = 1e-9;
    int max_iterations = 200;
};

/// Bisection on [lo, hi]. f(lo) and f(hi) must have opposite signs, otherwise
/// NoCrossingError is thrown. Terminates on |f| < f_tolerance or when the
/// bracket can no longer be split in double precision.
template <class F>
Root bisect(F&& f, double lo, double hi, const BisectOptions& opts = {})
{
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0) return {lo, flo, 0};
    if (fhi == 0) return {hi, fhi, 0};
    if (std::signbit(flo) == std::signbit(fhi)) {
        throw NoCrossingError("no sign change over [" + std::to_string(lo) + ", "
                              + std::to_string(hi) + "]");
    }

    Root best = std::abs(flo) < std::abs(fhi) ? Root{lo, flo, 0} : Root{hi, fhi, 0};
    for (int it = 1; it <= opts.max_iterations; ++it) {
        const double mid = lo + 0.5 * (hi - lo);
        const double fmid = f(mid);
        if (std::abs(fmid) < std::abs(best.fx)) best = {mid, fmid, it};
        best.iterations = it;
        if (std::abs(fmid) < opts.f_tolerance || mid <= lo || mid >= hi) return best;
        if (std::signbit(fmid) == std::signbit(flo)) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    return best;
}

struct BrentOptions
{
    /// Relative bracket tolerance; the bracket is also never allowed to
    /// shrink below a few ulps of the iterate.
    double x_tolerance = 1e-10;
    /// Absolute residual tolerance; iteration continues until both the
    /// bracket and the residual criterion are met, or the bracket is exhausted.
    double f_tolerance = std::numeric_limits<double>::infinity();
    int max_iterations = 200;
};

/// Brent's method (inverse quadratic interpolation with bisection fallback)
/// on a sign-changing bracket [a, b].
template <class F>
Root brent(F&& f, double a, double b, const BrentOptions& opts = {})
{
    constexpr double eps = std::numeric_limits<double>::epsilon();

    double fa = f(a);
    double fb = f(b);
    if (fa == 0) return {a, fa, 0};
    if (fb == 0) return {b, fb, 0};
    if (std::signbit(fa) == std::signbit(fb)) {
        throw NoCrossingError("no sign change over [" + std::to_string(a) + ", "
                              + std::to_string(b) + "]");
    }

    double c = a, fc = fa;
    double d = b - a, e = d;

    for (int it = 1; it <= opts.max_iterations; ++it) {
        if (std::signbit(fb) == std::signbit(fc)) {
            c = a;
            fc = fa;
            d = e = b - a;
        }
        if (std::abs(fc) < std::abs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }

        const double tol = 2 * eps * std::abs(b) + 0.5 * opts.x_tolerance * std::abs(b);
        const double floor_tol = 2 * eps * std::abs(b) + std::numeric_limits<double>::min();
        const double m = 0.5 * (c - b);

        const bool bracket_done = std::abs(m) <= tol;
        const bool residual_done = std::abs(fb) <= opts.f_tolerance;
        if (fb == 0 || (bracket_done && residual_done) || std::abs(m) <= floor_tol) {
            return {b, fb, it};
        }

        // Once the relative tolerance is met but the residual is not, keep
        // tightening with the machine-precision floor.
        const double step_tol = bracket_done ? floor_tol : tol;

        if (std::abs(e) >= step_tol && std::abs(fa) > std::abs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {
                p = 2 * m * s;
                q = 1 - s;
            } else {
                const double qa = fa / fc;
                const double r = fb / fc;
                p = s * (2 * m * qa * (qa - r) - (b - a) * (r - 1));
                q = (qa - 1) * (r - 1) * (s - 1);
            }
            if (p > 0) q = -q;
            p = std::abs(p);
            if (2 * p < std::min(3 * m * q - std::abs(step_tol * q), std::abs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }

        a = b;
        fa = fb;
        b += std::abs(d) > step_tol ? d : (m > 0 ? step_tol : -step_tol);
        fb = f(b);
    }
    throw ConvergenceError("Brent iteration did not converge within "
                           + std::to_string(opts.max_iterations) + " iterations");
}

} // namespace hsps::roots
