#pragma once

// Point-level multilinear algebra for a statistical structure (g, C): the
// induced operator family K, the commutator bracket [K,K], the sectional
// K-curvature of tangent planes, the constancy test for that curvature, and
// the Yukawa contraction. No differentiation happens here — everything acts
// on tensors already evaluated at a single point.

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "statfrob/errors.hpp"
#include "statfrob/linalg.hpp"

namespace statfrob {

// Symmetric positive-definite bilinear form on R^n. Entries are symmetrized
// on construction; positive definiteness is verified by Cholesky and the
// factor and inverse are cached.
class Metric {
  public:
    explicit Metric(Mat entries) : g_(std::move(entries)) {
        if (g_.rows() != g_.cols())
            throw DimensionMismatch("metric must be square, got " + std::to_string(g_.rows()) +
                                    "x" + std::to_string(g_.cols()));
        const int n = g_.rows();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double v = 0.5 * (g_(i, j) + g_(j, i));
                g_(i, j) = g_(j, i) = v;
            }
        chol_ = cholesky(g_);  // throws NotSpd when not positive-definite
        inv_ = spd_inverse(g_);
    }

    static Metric identity(int n) { return Metric(Mat::identity(n)); }

    int dim() const { return g_.rows(); }
    double operator()(int i, int j) const { return g_(i, j); }
    const Mat& entries() const { return g_; }
    const Mat& inverse() const { return inv_; }
    const Mat& cholesky_factor() const { return chol_; }

    double inner(const Vec& x, const Vec& y) const {
        double s = 0.0;
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j) s += x[i] * g_(i, j) * y[j];
        return s;
    }
    double norm(const Vec& x) const { return std::sqrt(inner(x, x)); }

  private:
    Mat g_;
    Mat chol_;
    Mat inv_;
};

// Totally symmetric cubic form C_ijk. Construction symmetrizes the input and
// records the discarded asymmetry (relative to the largest entry); asymmetry
// beyond the tolerance is a hard error, since it signals corrupted input
// rather than rounding noise.
class CubicTensor {
  public:
    explicit CubicTensor(const Tensor3& raw, double asym_rel_tol = 1e-12) : c_(raw.dim()) {
        const int n = raw.dim();
        const double scale = max_abs(raw);
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                for (int k = j; k < n; ++k) {
                    const double vals[6] = {raw(i, j, k), raw(i, k, j), raw(j, i, k),
                                            raw(j, k, i), raw(k, i, j), raw(k, j, i)};
                    double mean = 0.0;
                    for (double v : vals) mean += v;
                    mean /= 6.0;
                    for (double v : vals) worst = std::max(worst, std::abs(v - mean));
                    c_(i, j, k) = c_(i, k, j) = c_(j, i, k) = mean;
                    c_(j, k, i) = c_(k, i, j) = c_(k, j, i) = mean;
                }
        asymmetry_ = (scale > 0.0) ? worst / scale : 0.0;
        if (asymmetry_ > asym_rel_tol)
            throw SymmetryError("cubic tensor asymmetry " + std::to_string(asymmetry_) +
                                " (relative) exceeds tolerance " + std::to_string(asym_rel_tol));
    }

    int dim() const { return c_.dim(); }
    double operator()(int i, int j, int k) const { return c_(i, j, k); }
    const Tensor3& entries() const { return c_; }
    double recorded_asymmetry() const { return asymmetry_; }

    double evaluate(const Vec& x, const Vec& y, const Vec& z) const {
        double s = 0.0;
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j)
                for (int k = 0; k < dim(); ++k) s += c_(i, j, k) * x[i] * y[j] * z[k];
        return s;
    }

    // The skewness tensor carried by a statistical manifold equals -2C in
    // our storage convention.
    Tensor3 skewness() const {
        Tensor3 t(dim());
        for (std::size_t i = 0; i < t.data().size(); ++i) t.data()[i] = -2.0 * c_.data()[i];
        return t;
    }

  private:
    Tensor3 c_;
    double asymmetry_ = 0.0;
};

// Family of self-adjoint operators X -> K_X with components K^h_ij, stored
// together with the metric used for raising so bracket/curvature routines
// need no extra argument. Self-adjointness w.r.t. that metric (equivalently:
// total symmetry of the lowered tensor) is verified at construction.
class KOperator {
  public:
    KOperator(Tensor3 components, Metric g, double tol = 1e-12)
        : k_(std::move(components)), g_(std::move(g)) {
        if (k_.dim() != g_.dim())
            throw DimensionMismatch("operator dim " + std::to_string(k_.dim()) +
                                    " does not match metric dim " + std::to_string(g_.dim()));
        const int n = k_.dim();
        // Lower the upper index; the result must be totally symmetric.
        Tensor3 low(n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = 0.0;
                    for (int h = 0; h < n; ++h) s += g_(k, h) * k_(h, i, j);
                    low(i, j, k) = s;
                }
        const double scale = std::max(max_abs(low), 1e-300);
        double worst = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    worst = std::max(worst, std::abs(low(i, j, k) - low(j, i, k)));
                    worst = std::max(worst, std::abs(low(i, j, k) - low(i, k, j)));
                }
        if (worst / scale > tol)
            throw SymmetryError("operator family is not self-adjoint: lowered asymmetry " +
                                std::to_string(worst / scale) + " (relative)");
    }

    int dim() const { return k_.dim(); }
    const Metric& metric() const { return g_; }
    // component h of K(e_i, e_j)
    double operator()(int h, int i, int j) const { return k_(h, i, j); }
    const Tensor3& components() const { return k_; }

    // K(x, y) as a vector
    Vec apply(const Vec& x, const Vec& y) const {
        const int n = dim();
        Vec out(n, 0.0);
        for (int h = 0; h < n; ++h) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                if (x[i] == 0.0) continue;
                for (int j = 0; j < n; ++j) s += k_(h, i, j) * x[i] * y[j];
            }
            out[h] = s;
        }
        return out;
    }

    // the matrix of the operator K_x
    Mat matrix_of(const Vec& x) const {
        const int n = dim();
        Mat m(n, n);
        for (int h = 0; h < n; ++h)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += k_(h, i, j) * x[i];
                m(h, j) = s;
            }
        return m;
    }

  private:
    Tensor3 k_;
    Metric g_;
};

// K^h_ij = g^{hk} C_ijk
inline KOperator raise_index(const CubicTensor& c, const Metric& g) {
    if (c.dim() != g.dim())
        throw DimensionMismatch("cubic tensor dim " + std::to_string(c.dim()) +
                                " does not match metric dim " + std::to_string(g.dim()));
    const int n = c.dim();
    const Mat& gi = g.inverse();
    Tensor3 k(n);
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int m = 0; m < n; ++m) s += gi(h, m) * c(i, j, m);
                k(h, i, j) = s;
            }
    return KOperator(std::move(k), g);
}

// C_ijk = g_kh K^h_ij (inverse of raise_index)
inline CubicTensor lower_index(const KOperator& k, const Metric& g) {
    const int n = k.dim();
    Tensor3 c(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int m = 0; m < n; ++m) {
                double s = 0.0;
                for (int h = 0; h < n; ++h) s += g(m, h) * k(h, i, j);
                c(i, j, m) = s;
            }
    return CubicTensor(c);
}

// [K,K](X,Y)Z = K_X K_Y Z - K_Y K_X Z, with both the operator-valued
// components and the fully lowered array
//   s(i,j,k,l) = g([K,K](e_i,e_j) e_l, e_k).
struct BracketTensor {
    Tensor4 op;  // op(h,i,j,k): component h of [K,K](e_i,e_j) e_k
    Tensor4 s;

    int dim() const { return s.dim(); }
};

inline BracketTensor bracket(const KOperator& k) {
    const int n = k.dim();
    const Metric& g = k.metric();
    BracketTensor b{Tensor4(n), Tensor4(n)};
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int m = 0; m < n; ++m) {
                    double s = 0.0;
                    for (int p = 0; p < n; ++p)
                        s += k(h, i, p) * k(p, j, m) - k(h, j, p) * k(p, i, m);
                    b.op(h, i, j, m) = s;
                }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int kk = 0; kk < n; ++kk)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int h = 0; h < n; ++h) s += g(kk, h) * b.op(h, i, j, l);
                    b.s(i, j, kk, l) = s;
                }
    return b;
}

// Curvature of the plane spanned by x and y: g([K,K](e1,e2) e2, e1) after
// g-orthonormalizing the pair. Independent of the basis chosen for the plane.
inline double sectional_k_curvature(const KOperator& k, const Metric& g, const Vec& x,
                                    const Vec& y) {
    if (static_cast<int>(x.size()) != k.dim() || static_cast<int>(y.size()) != k.dim())
        throw DimensionMismatch("plane vectors do not match operator dimension");
    const double gxx = g.inner(x, x);
    const double gxy = g.inner(x, y);
    const double gyy = g.inner(y, y);
    const double gram = gxx * gyy - gxy * gxy;
    if (!(gram > 1e-12 * std::max(gxx * gyy, 1e-300)))
        throw DegeneratePlane("vectors are nearly dependent (relative Gram determinant " +
                              std::to_string(gram / std::max(gxx * gyy, 1e-300)) + ")");
    const Vec e1 = scaled(1.0 / std::sqrt(gxx), x);
    Vec w = axpy(-g.inner(y, e1), e1, y);
    const Vec e2 = scaled(1.0 / g.norm(w), w);

    const Vec kyy = k.apply(e2, e2);
    const Vec a = k.apply(e1, kyy);   // K_{e1} K_{e2} e2
    const Vec kxy = k.apply(e1, e2);
    const Vec b = k.apply(e2, kxy);   // K_{e2} K_{e1} e2
    return g.inner(sub(a, b), e1);
}

// Tests whether the sectional K-curvature is one constant A on all planes,
// via the equivalent algebraic criterion
//   g(K(X,W),K(Y,Z)) - g(K(Y,W),K(X,Z)) = A [g(X,W)g(Y,Z) - g(Y,W)g(X,Z)]
// on basis quadruples. A is fit by least squares so the check tolerates
// numerical noise; returns the fitted A when the max residual (relative to
// the left-hand side's scale) stays below tol, empty otherwise.
inline std::optional<double> check_constant_curvature(const KOperator& k, const Metric& g,
                                                      double tol) {
    const int n = k.dim();
    // all K(e_i,e_j) vectors, then their pairwise g-inner products
    std::vector<Vec> kv(static_cast<std::size_t>(n) * n);
    Vec basis_i(n, 0.0), basis_j(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Vec v(n);
            for (int h = 0; h < n; ++h) v[h] = k(h, i, j);
            kv[static_cast<std::size_t>(i) * n + j] = std::move(v);
        }
    auto pair_inner = [&](int a, int b, int c, int d) {
        return g.inner(kv[static_cast<std::size_t>(a) * n + b],
                       kv[static_cast<std::size_t>(c) * n + d]);
    };

    Tensor4 lhs(n), rhs(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int kk = 0; kk < n; ++kk)
                for (int l = 0; l < n; ++l) {
                    lhs(i, j, kk, l) = pair_inner(i, l, j, kk) - pair_inner(j, l, i, kk);
                    rhs(i, j, kk, l) = g(i, l) * g(j, kk) - g(j, l) * g(i, kk);
                }

    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < lhs.data().size(); ++t) {
        num += lhs.data()[t] * rhs.data()[t];
        den += rhs.data()[t] * rhs.data()[t];
    }
    const double a_fit = (den > 0.0) ? num / den : 0.0;

    double worst = 0.0;
    for (std::size_t t = 0; t < lhs.data().size(); ++t)
        worst = std::max(worst, std::abs(lhs.data()[t] - a_fit * rhs.data()[t]));
    const double scale = std::max({1.0, max_abs(lhs), std::abs(a_fit) * max_abs(rhs)});
    if (worst / scale <= tol) return a_fit;
    return std::nullopt;
}

// Y = C_ijk C^ijk - C_i C^i with all raising done by g^{-1}
inline double yukawa_term(const CubicTensor& c, const Metric& g) {
    if (c.dim() != g.dim())
        throw DimensionMismatch("cubic tensor dim does not match metric dim");
    const int n = c.dim();
    const Mat& gi = g.inverse();

    // raise the three slots one at a time
    Tensor3 t1(n), t2(n), up(n);
    for (int a = 0; a < n; ++a)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int p = 0; p < n; ++p) s += gi(a, p) * c(p, j, k);
                t1(a, j, k) = s;
            }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int k = 0; k < n; ++k) {
                double s = 0.0;
                for (int q = 0; q < n; ++q) s += gi(b, q) * t1(a, q, k);
                t2(a, b, k) = s;
            }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int d = 0; d < n; ++d) {
                double s = 0.0;
                for (int r = 0; r < n; ++r) s += gi(d, r) * t2(a, b, r);
                up(a, b, d) = s;
            }

    double full = 0.0;
    for (std::size_t t = 0; t < up.data().size(); ++t) full += c.entries().data()[t] * up.data()[t];

    Vec clo(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) s += c(i, j, k) * gi(j, k);
        clo[i] = s;
    }
    const Vec cup = matvec(gi, clo);
    return full - dot(clo, cup);
}

}  // namespace statfrob
