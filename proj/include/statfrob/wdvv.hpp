#pragma once

// WDVV machinery in both of its guises: the Hessian-metric curvature closed
// form (whose vanishing is the classical potential-form WDVV equation), and
// the structure-matrix form F_i B⁻¹ F_j = F_j B⁻¹ F_i for a prepotential with
// unit-coefficient functions A_k. The trilogarithm prepotential built over
// the BC_n root directions is supported with closed-form third derivatives;
// a series evaluation of the prepotential itself is included as the
// independent oracle for those closed forms.

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "statfrob/bcn.hpp"
#include "statfrob/chart.hpp"
#include "statfrob/errors.hpp"
#include "statfrob/expr.hpp"
#include "statfrob/fd.hpp"
#include "statfrob/geometry.hpp"
#include "statfrob/linalg.hpp"

namespace statfrob {

// ---------------------------------------------------------------------------
// Hessian-metric curvature closed form
// ---------------------------------------------------------------------------

namespace detail {

struct HessianR4 {
    Tensor4 upper;    // R^l_ijk
    Tensor4 lowered;  // g(R(e_i,e_j) e_l, e_k)
    double wdvv_max = 0.0;  // max |g^{pq}(φ_ilp φ_jkq − φ_ikp φ_jlq)|
};

inline HessianR4 hessian_r4(const ChartField& chart, const Vec& x) {
    if (chart.kind() != ChartKind::hessian)
        throw ConfigError("Hessian curvature closed form needs a potential chart, got " +
                          std::string(chart_kind_name(chart.kind())));
    const int n = chart.dim();
    const auto [g, c] = chart.evaluate(x);
    // third derivatives of the potential: the stored cubic form is −φ_ijk/2
    Tensor3 p3(n);
    for (std::size_t t = 0; t < p3.data().size(); ++t)
        p3.data()[t] = -2.0 * c.entries().data()[t];
    const Mat& gi = g.inverse();

    HessianR4 out{Tensor4(n), Tensor4(n), 0.0};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int p = 0; p < n; ++p)
                        for (int q = 0; q < n; ++q)
                            s += gi(p, q) * (p3(i, l, p) * p3(j, k, q) -
                                             p3(i, k, p) * p3(j, l, q));
                    out.lowered(i, j, k, l) = 0.25 * s;
                    out.wdvv_max = std::max(out.wdvv_max, std::abs(s));
                }
    // raise the third slot of the lowered array back to the operator form
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = 0.0;
                    for (int m = 0; m < n; ++m) s += gi(l, m) * out.lowered(i, j, m, k);
                    out.upper(l, i, j, k) = s;
                }
    return out;
}

}  // namespace detail

// Curvature of the Levi-Civita connection of a Hessian metric, by the closed
// form R_ijkl = ¼ g^{pq}(φ_ilp φ_jkq − φ_ikp φ_jlq). Index convention matches
// curvature(): lowered(i,j,k,l) = g(R(e_i,e_j) e_l, e_k).
inline CurvatureTensor hessian_curvature(const ChartField& chart, const Vec& x) {
    detail::HessianR4 r = detail::hessian_r4(chart, x);
    return CurvatureTensor{std::move(r.upper), std::move(r.lowered)};
}

// Potential-form WDVV residual: max over (i,j,k,l) of
// |g^{pq}(φ_ilp φ_jkq − φ_ikp φ_jlq)|, i.e. exactly four times the max entry
// of the Hessian curvature. Zero iff the Hessian metric is flat.
inline double wdvv_residual_hessian(const ChartField& chart, const Vec& x) {
    return detail::hessian_r4(chart, x).wdvv_max;
}

// ---------------------------------------------------------------------------
// Trilogarithm series (oracle kernel)
// ---------------------------------------------------------------------------

// Σ_{k≥1} w^k/k³ for w in (0,1), summed until the next term falls below
// 1e-16 of the partial sum.
inline double li3(double w) {
    if (!(w > 0.0) || !(w < 1.0))
        throw DomainError("trilogarithm argument must lie in (0,1), got " + std::to_string(w),
                          "li3");
    double sum = 0.0;
    double pw = 1.0;
    for (int k = 1; k < 100000; ++k) {
        pw *= w;
        const double term = pw / (static_cast<double>(k) * k * k);
        sum += term;
        if (term < 1e-16 * sum) break;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Prepotential charts
// ---------------------------------------------------------------------------

enum class PrepKind { bcn, generic };

// A potential function F in flat coordinates together with the
// unit-coefficient functions A_k that build B_ij = Σ_k A_k F_kij. The BC_n
// kind carries (n, s, q) with r derived from the constraint and uses
// closed-form third derivatives; the generic kind differentiates a parsed
// expression by finite differences.
class Prepotential {
  public:
    static Prepotential make_bcn(BcnParams params) {
        Prepotential p(PrepKind::bcn, params.n);
        p.bcn_ = params;
        return p;
    }

    static Prepotential make_generic(int dim, ScalarExpr f, std::vector<ScalarExpr> unit_coeffs,
                                     FdPolicy fd = {}) {
        if (dim < 1 || dim > 32)
            throw ConfigError("prepotential dimension must be in [1,32], got " +
                              std::to_string(dim));
        if (f.empty()) throw ConfigError("prepotential needs a potential expression");
        if (f.dim() != dim) throw ConfigError("potential expression dimension mismatch");
        if (!unit_coeffs.empty() && static_cast<int>(unit_coeffs.size()) != dim)
            throw ConfigError("expected " + std::to_string(dim) +
                              " unit-coefficient expressions, got " +
                              std::to_string(unit_coeffs.size()));
        fd.validate();
        Prepotential p(PrepKind::generic, dim);
        p.f_ = std::move(f);
        p.a_ = std::move(unit_coeffs);
        p.fd_ = fd;
        return p;
    }

    PrepKind kind() const { return kind_; }
    int dim() const { return dim_; }
    const BcnParams& bcn_params() const { return bcn_; }
    const ScalarExpr& potential() const { return f_; }
    const std::vector<ScalarExpr>& unit_coeffs() const { return a_; }
    const FdPolicy& fd() const { return fd_; }

  private:
    Prepotential(PrepKind kind, int dim) : kind_(kind), dim_(dim) {}

    PrepKind kind_;
    int dim_;
    BcnParams bcn_{};
    ScalarExpr f_;
    std::vector<ScalarExpr> a_;
    FdPolicy fd_{};
};

// Third-derivative tensor F_ijk of the prepotential at x.
inline Tensor3 prepotential_third(const Prepotential& p, const Vec& x) {
    if (static_cast<int>(x.size()) != p.dim())
        throw DimensionMismatch("point dimension does not match prepotential");
    if (p.kind() == PrepKind::bcn) {
        bcn_require_generic(p.bcn_params(), x);
        return bcn_third_derivatives(p.bcn_params(), x);
    }
    const int n = p.dim();
    Tensor3 t(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                const double v = derive_fd(p.potential(), x, {i, j, k}, p.fd());
                t(i, j, k) = t(i, k, j) = t(j, i, k) = v;
                t(j, k, i) = t(k, i, j) = t(k, j, i) = v;
            }
    return t;
}

// The structure matrices F_1..F_n with (F_i)_jk = F_ijk. Sliced from one
// third-derivative tensor, so the matrices are symmetric and mutually
// consistent by construction.
inline std::vector<Mat> structure_matrices(const Prepotential& p, const Vec& x) {
    const Tensor3 t = prepotential_third(p, x);
    const int n = t.dim();
    std::vector<Mat> f(n, Mat(n, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) f[i](j, k) = t(i, j, k);
    return f;
}

// Values of the unit-coefficient functions at x: sinh(2x_k) for the BC_n
// kind, the configured expressions otherwise.
inline Vec unit_coefficient_values(const Prepotential& p, const Vec& x) {
    if (p.kind() == PrepKind::bcn) return bcn_unit_coefficients(x);
    if (p.unit_coeffs().empty())
        throw ConfigError("prepotential has no unit-coefficient expressions configured");
    Vec a(p.dim());
    for (int k = 0; k < p.dim(); ++k) a[k] = p.unit_coeffs()[k].eval(x);
    return a;
}

// B_ij = Σ_k A_k F_kij. Symmetric; must be invertible (possibly indefinite)
// to enter the WDVV residuals, so |det B| ≤ 1e-12·‖B‖ⁿ raises SingularB.
inline Mat unit_metric_B(const Prepotential& p, const Vec& x) {
    const Tensor3 t = prepotential_third(p, x);
    const Vec a = unit_coefficient_values(p, x);
    const int n = t.dim();
    Mat b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += a[k] * t(k, i, j);
            b(i, j) = s;
        }
    const double det = lu_factor(b).det();
    const double norm = frobenius_norm(b);
    if (std::abs(det) <= 1e-12 * std::pow(std::max(norm, 1e-300), n))
        throw SingularB("unit metric B is singular: |det| = " + std::to_string(std::abs(det)) +
                        " against scale " + std::to_string(norm));
    return b;
}

// ---------------------------------------------------------------------------
// Matrix-form WDVV residuals
// ---------------------------------------------------------------------------

struct WdvvPair {
    int i = 0, j = 0;
    double residual = 0.0;
};

struct WdvvReport {
    Vec point;
    Mat b;
    // BC_n-only fields; NaN/zero for generic prepotentials
    double h = std::numeric_limits<double>::quiet_NaN();
    double b_offdiag_max = 0.0;
    double b_diag_h_max = 0.0;
    std::vector<WdvvPair> pairs;
    double worst_pair = 0.0;
    double tol = 1e-8;
    bool pass = false;
};

// Per-pair residuals ‖F_i B⁻¹ F_j − F_j B⁻¹ F_i‖_F, normalized by
// ‖F_i‖_F·‖B⁻¹‖_F·‖F_j‖_F so the report is invariant under F → cF. For the
// BC_n kind the report additionally compares B against h(x)·I with
// h = r + 2q Σ cosh 2x_k.
inline WdvvReport wdvv_matrix_residual(const Prepotential& p, const Vec& x, double tol = 1e-8) {
    const std::vector<Mat> f = structure_matrices(p, x);
    const Mat b = unit_metric_B(p, x);
    const Mat binv = lu_inverse(lu_factor(b));
    const double binv_norm = frobenius_norm(binv);
    const int n = p.dim();

    WdvvReport rep;
    rep.point = x;
    rep.b = b;
    rep.tol = tol;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const Mat left = matmul(f[i], matmul(binv, f[j]));
            const Mat right = matmul(f[j], matmul(binv, f[i]));
            const double den =
                frobenius_norm(f[i]) * binv_norm * frobenius_norm(f[j]);
            const double num = frobenius_norm(sub(left, right));
            const double r = (den > 1e-300) ? num / den : 0.0;
            rep.pairs.push_back(WdvvPair{i + 1, j + 1, r});
            rep.worst_pair = std::max(rep.worst_pair, r);
        }
    if (p.kind() == PrepKind::bcn) {
        rep.h = bcn_h_value(p.bcn_params(), x);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j)
                    rep.b_diag_h_max = std::max(rep.b_diag_h_max, std::abs(b(i, j) - rep.h));
                else
                    rep.b_offdiag_max = std::max(rep.b_offdiag_max, std::abs(b(i, j)));
            }
    }
    rep.pass = rep.worst_pair <= tol;
    return rep;
}

// ---------------------------------------------------------------------------
// Full BC_n theorem verifier
// ---------------------------------------------------------------------------

struct AafReport {
    BcnParams params;
    std::vector<WdvvReport> points;
    double worst_offdiag = 0.0;
    double worst_diag_h = 0.0;
    double worst_pair = 0.0;
    double tol = 1e-8;
    bool pass = false;
};

// Checks, at every supplied point: (a) B is diagonal, (b) its diagonal equals
// h(x) = r + 2q Σ cosh 2x_k, (c) the matrix-form WDVV residuals vanish.
// Points inside the coth pole margin are rejected up front. This overload
// accepts arbitrary parameters, including an r detached from the constraint —
// that is how the deliberately-broken control runs are expressed.
inline AafReport verify_aaf(const BcnParams& params, const std::vector<Vec>& points,
                            double tol = 1e-8) {
    const Prepotential prep = Prepotential::make_bcn(params);

    AafReport rep;
    rep.params = params;
    rep.tol = tol;
    for (const Vec& x : points) {
        if (auto bad = bcn_genericity_violation(params, x))
            throw SingularPoint("point " + format_point(x) + " hits a coth pole margin", *bad);
        WdvvReport r = wdvv_matrix_residual(prep, x, tol);
        rep.worst_offdiag = std::max(rep.worst_offdiag, r.b_offdiag_max);
        rep.worst_diag_h = std::max(rep.worst_diag_h, r.b_diag_h_max);
        rep.worst_pair = std::max(rep.worst_pair, r.worst_pair);
        r.pass = r.pass && r.b_offdiag_max <= tol && r.b_diag_h_max <= tol;
        rep.points.push_back(std::move(r));
    }
    rep.pass = !rep.points.empty() && rep.worst_offdiag <= tol && rep.worst_diag_h <= tol &&
               rep.worst_pair <= tol;
    return rep;
}

inline AafReport verify_aaf(int n, double s, double q, const std::vector<Vec>& points,
                            double margin = 1e-3, double tol = 1e-8) {
    return verify_aaf(BcnParams::make(n, s, q, margin), points, tol);
}

// ---------------------------------------------------------------------------
// Series evaluation of the BC_n prepotential (oracle for the closed forms)
// ---------------------------------------------------------------------------

// f(z) = z³/6 − ¼ Li₃(e^{−2z}), valid for z > 0 only — which is where the
// trilogarithm series converges. Used to validate the closed-form third
// derivatives by finite differences; not part of any residual computation.
inline double bcn_kernel_series(double z) {
    if (!(z > 0.0))
        throw DomainError("series kernel needs a positive argument, got " + std::to_string(z),
                          "f");
    return z * z * z / 6.0 - 0.25 * li3(std::exp(-2.0 * z));
}

// F(x) = r Σ f(x_i) + s Σ f(2x_i) + q Σ_{i<j} [f(x_i+x_j) + f(x_i−x_j)].
// Every argument must be positive, which holds when x is sorted strictly
// descending with positive entries.
inline double bcn_prepotential_series(const BcnParams& p, const Vec& x) {
    if (static_cast<int>(x.size()) != p.n)
        throw DimensionMismatch("point dimension does not match BC_n rank");
    double sum = 0.0;
    for (int i = 0; i < p.n; ++i)
        sum += p.r * bcn_kernel_series(x[i]) + p.s * bcn_kernel_series(2.0 * x[i]);
    for (int i = 0; i < p.n; ++i)
        for (int j = i + 1; j < p.n; ++j)
            sum += p.q * (bcn_kernel_series(x[i] + x[j]) + bcn_kernel_series(x[i] - x[j]));
    return sum;
}

}  // namespace statfrob
