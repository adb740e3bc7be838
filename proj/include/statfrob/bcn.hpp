#pragma once

// Closed-form derivative kernels for the BC_n-type prepotential built from
// f(z) = z^3/6 - (1/4) Li3(e^{-2z}) summed over the root directions x_i,
// 2x_i and x_i +- x_j:
//
//   F(x) = r*sum_i f(x_i) + s*sum_i f(2x_i)
//        + q*sum_{i<j} [ f(x_i+x_j) + f(x_i-x_j) ],   r = -8s - 2q(n-2).
//
// Differentiating the building block gives f''(z) = |z| + log(1 - e^{-2|z|})
// (even extension) and f'''(z) = coth(z), so second and third derivatives of
// F need no polylogarithms. All arguments must stay outside a pole margin;
// points inside it are rejected, never perturbed.

#include <cmath>
#include <optional>
#include <string>

#include "statfrob/errors.hpp"
#include "statfrob/expr.hpp"
#include "statfrob/linalg.hpp"

namespace statfrob {

struct BcnParams {
    int n = 2;
    double s = 0.0;
    double q = 1.0;
    double r = 0.0;       // normally tied to (n, s, q); overridable for controls
    double margin = 1e-3; // minimum |argument| for every coth pole

    static double constraint_r(int n, double s, double q) {
        const double r = -8.0 * s - 2.0 * q * (n - 2);
        return r == 0.0 ? 0.0 : r;  // avoid a cosmetic -0 in reports
    }

    static BcnParams make(int n, double s, double q, double margin = 1e-3) {
        BcnParams p;
        p.n = n;
        p.s = s;
        p.q = q;
        p.r = constraint_r(n, s, q);
        p.margin = margin;
        if (n < 2) throw ConfigError("bcn requires n >= 2");
        if (!(margin > 0.0)) throw ConfigError("bcn pole margin must be positive");
        return p;
    }

    bool satisfies_constraint(double tol = 1e-12) const {
        return std::abs(r - constraint_r(n, s, q)) <= tol;
    }
};

// Which pole-margin constraint does x violate, if any? Returns a description
// of the first offending argument, e.g. "x1-x2".
inline std::optional<std::string> bcn_genericity_violation(const BcnParams& p, const Vec& x) {
    if (static_cast<int>(x.size()) != p.n)
        throw DimensionMismatch("point dimension does not match bcn n");
    for (int i = 0; i < p.n; ++i) {
        if (std::abs(x[i]) < p.margin) return "x" + std::to_string(i + 1);
        if (std::abs(2.0 * x[i]) < p.margin) return "2*x" + std::to_string(i + 1);
    }
    for (int i = 0; i < p.n; ++i)
        for (int j = i + 1; j < p.n; ++j) {
            if (std::abs(x[i] + x[j]) < p.margin)
                return "x" + std::to_string(i + 1) + "+x" + std::to_string(j + 1);
            if (std::abs(x[i] - x[j]) < p.margin)
                return "x" + std::to_string(i + 1) + "-x" + std::to_string(j + 1);
        }
    return std::nullopt;
}

inline void bcn_require_generic(const BcnParams& p, const Vec& x) {
    if (auto bad = bcn_genericity_violation(p, x))
        throw DomainError("argument within coth pole margin " + std::to_string(p.margin), *bad);
}

// f''(z) = |z| + log(1 - e^{-2|z|}); even extension of the z > 0 branch.
inline double bcn_f2(double z) {
    const double a = std::abs(z);
    return a + std::log(-std::expm1(-2.0 * a));
}

// Third derivatives F_ijk in closed form:
//   F_iii = r coth(x_i) + 8 s coth(2 x_i) + q sum_{j != i} [coth(x_i+x_j) + coth(x_i-x_j)]
//   F_iij = q [coth(x_i+x_j) - coth(x_i-x_j)]          (i != j)
//   all entries with three distinct indices vanish.
inline Tensor3 bcn_third_derivatives(const BcnParams& p, const Vec& x) {
    bcn_require_generic(p, x);
    const int n = p.n;
    auto cth = [](double z) { return eval_coth(z, "bcn argument"); };
    Tensor3 f3(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double diag = p.r * cth(x[i]) + 8.0 * p.s * cth(2.0 * x[i]);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            diag += p.q * (cth(x[i] + x[j]) + cth(x[i] - x[j]));
            const double mixed = p.q * (cth(x[i] + x[j]) - cth(x[i] - x[j]));
            f3(i, i, j) = f3(i, j, i) = f3(j, i, i) = mixed;
        }
        f3(i, i, i) = diag;
    }
    return f3;
}

// Hessian of F in closed form (used when a bcn chart is fed to the
// connection/curvature machinery):
//   F_ii = r f2(x_i) + 4 s f2(2 x_i) + q sum_{j != i} [f2(x_i+x_j) + f2(x_i-x_j)]
//   F_ij = q [f2(x_i+x_j) - f2(x_i-x_j)]              (i != j)
inline Mat bcn_hessian(const BcnParams& p, const Vec& x) {
    bcn_require_generic(p, x);
    const int n = p.n;
    Mat h(n, n);
    for (int i = 0; i < n; ++i) {
        double diag = p.r * bcn_f2(x[i]) + 4.0 * p.s * bcn_f2(2.0 * x[i]);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            diag += p.q * (bcn_f2(x[i] + x[j]) + bcn_f2(x[i] - x[j]));
            h(i, j) = p.q * (bcn_f2(x[i] + x[j]) - bcn_f2(x[i] - x[j]));
        }
        h(i, i) = diag;
    }
    return h;
}

// h(x) = r + 2q sum_k cosh(2 x_k): the predicted common diagonal of the unit
// metric B when the parameter constraint holds.
inline double bcn_h_value(const BcnParams& p, const Vec& x) {
    double acc = p.r;
    for (double xi : x) acc += 2.0 * p.q * std::cosh(2.0 * xi);
    return acc;
}

// d h / d x_i = 4 q sinh(2 x_i), the gradient of the diagonal value.
inline Vec bcn_h_gradient(const BcnParams& p, const Vec& x) {
    Vec grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = 4.0 * p.q * std::sinh(2.0 * x[i]);
    return grad;
}

// Unit coefficients A_k(x) = sinh(2 x_k).
inline Vec bcn_unit_coefficients(const Vec& x) {
    Vec a(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) a[i] = std::sinh(2.0 * x[i]);
    return a;
}

}  // namespace statfrob
