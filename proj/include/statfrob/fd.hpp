#pragma once

// Central-difference differentiation with Richardson extrapolation, for
// scalar expressions and for arbitrary callables of a point. Mixed partials
// up to order three are computed by nesting first-derivative stencils, one
// axis of the multi-index at a time; every stencil is extrapolated.
//
// Step sizes scale per axis as h * max(1, |x_i|) so truncation error is
// uniform in relative terms. The base step is chosen by the *total* order of
// the requested derivative: third derivatives need a coarser step than first
// or second ones to keep rounding noise below truncation error.

#include <cmath>
#include <functional>
#include <vector>

#include "statfrob/errors.hpp"
#include "statfrob/expr.hpp"
#include "statfrob/linalg.hpp"

namespace statfrob {

struct FdPolicy {
    double h_low = 1e-4;    // base step for derivative orders 1 and 2
    double h_third = 1e-2;  // base step for order 3
    int levels = 2;         // Richardson extrapolation levels (>= 1)

    double base_step(int total_order) const { return total_order >= 3 ? h_third : h_low; }

    void validate() const {
        if (!(h_low > 0.0) || !(h_third > 0.0))
            throw ConfigError("finite-difference steps must be positive");
        if (levels < 1) throw ConfigError("Richardson levels must be >= 1");
    }
};

using PointFn = std::function<double(const Vec&)>;

namespace detail {

// First derivative of f along `axis` at x, step s, with `levels` rounds of
// Richardson extrapolation on the O(s^2) central stencil. Entry r[k][m] of
// the table uses steps down to s/2^k with the s^2..s^(2m) error terms
// removed; the bottom-right corner is the answer.
inline double central_derivative(const PointFn& f, const Vec& x, int axis, double s, int levels) {
    std::vector<std::vector<double>> r(levels);
    for (int k = 0; k < levels; ++k) {
        const double sk = s / static_cast<double>(1 << k);
        Vec xp(x), xm(x);
        xp[axis] += sk;
        xm[axis] -= sk;
        r[k].resize(k + 1);
        r[k][0] = (f(xp) - f(xm)) / (2.0 * sk);
        for (int m = 1; m <= k; ++m) {
            const double pow4 = std::pow(4.0, m);
            r[k][m] = (pow4 * r[k][m - 1] - r[k - 1][m - 1]) / (pow4 - 1.0);
        }
    }
    return r[levels - 1][levels - 1];
}

}  // namespace detail

// -- the public entry points ----------------------------------------------

// Derivative of a callable with respect to the axes listed in `multi_index`
// (e.g. {0,0,1} is d^3/dx1^2 dx2). Axes may repeat and order is immaterial.
inline double derive_fd_fn(const PointFn& f, const Vec& x, const std::vector<int>& multi_index,
                           const FdPolicy& policy = {}) {
    policy.validate();
    if (multi_index.size() > 3)
        throw ConfigError("derivatives above order 3 are not supported");
    for (int a : multi_index)
        if (a < 0 || a >= static_cast<int>(x.size()))
            throw DimensionMismatch("derivative axis " + std::to_string(a) +
                                    " outside point dimension " + std::to_string(x.size()));
    if (multi_index.empty()) return f(x);

    const int total_order = static_cast<int>(multi_index.size());

    // Recursive nesting: differentiate along the first axis the function
    // "derivative along the remaining axes". The outermost stencil uses the
    // policy's base step for the requested order; inner stencils use the
    // coarse step, because their rounding noise is divided by the outer step
    // and a fine inner step would push the noise floor of a second
    // derivative to ~eps/h². With a coarse inner step the inner noise is
    // ~eps/h_third and the nested result stays near truncation accuracy.
    std::function<double(const Vec&, std::size_t)> nest = [&](const Vec& p,
                                                              std::size_t depth) -> double {
        const int axis = multi_index[depth];
        const double base = (depth == 0) ? policy.base_step(total_order) : policy.h_third;
        const double step = base * std::max(1.0, std::abs(p[axis]));
        if (depth + 1 == multi_index.size()) {
            return detail::central_derivative(f, p, axis, step, policy.levels);
        }
        PointFn inner = [&](const Vec& q) { return nest(q, depth + 1); };
        return detail::central_derivative(inner, p, axis, step, policy.levels);
    };
    return nest(x, 0);
}

inline double derive_fd(const ScalarExpr& e, const Vec& x, const std::vector<int>& multi_index,
                        const FdPolicy& policy = {}) {
    return derive_fd_fn([&](const Vec& p) { return e.eval(p); }, x, multi_index, policy);
}

}  // namespace statfrob
