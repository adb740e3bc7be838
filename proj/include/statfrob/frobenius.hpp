#pragma once

// The tangent-space product X∘Y = K(X,Y) and the algebra built on it:
// associativity diagnostics, the unit, canonical idempotents, and the two
// basis algorithms — simultaneous diagonalization of the commuting operator
// family (flat case) and the sphere-maximization recursion that produces the
// (λ_i, μ_i, A_i) data in the constant-curvature case. A point-cloud
// diagnostic for the parallel-frame rigidity statements closes the file.
//
// All basis computations run in g-orthonormal coordinates obtained from the
// Cholesky factor of the metric: with g = LLᵀ, the substitution u = Lᵀv turns
// g-inner products into Euclidean ones, so the eigensolver and the sphere
// iteration never need the metric explicitly.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "statfrob/chart.hpp"
#include "statfrob/errors.hpp"
#include "statfrob/geometry.hpp"
#include "statfrob/linalg.hpp"
#include "statfrob/tensor.hpp"

namespace statfrob {

// Output of the basis algorithms: a g-orthonormal basis (columns of `basis`,
// in the original coordinates) together with the recursion data
//   K(e_i,e_i) = λ_i e_i + Σ_{k<i} μ_k e_k,   K(e_i,e_j) = μ_{min(i,j)} e_{max(i,j)},
// and the curvature sequence A_0..A_n with A_i = A_{i-1} − μ_i². For the
// diagonalization path (A = 0) the μ_i are zero and the A_i all vanish.
struct SpectralData {
    int dim = 0;
    Mat basis;    // column i = e_i, original coordinates
    Vec lambda;   // λ_1..λ_n
    Vec mu;       // μ_1..μ_n (μ_n never enters the reconstruction)
    Vec a_seq;    // A_0..A_n
    std::vector<int> winning_restarts;  // per recursion step; empty for diagonalization
};

// Canonical idempotent frame u_i = e_i/λ_i with the g-norms of its members.
struct IdempotentFrame {
    int dim = 0;
    Mat u;      // column i = u_i, original coordinates
    Vec norms;  // g(u_i, u_i)
};

// X∘Y = K(X,Y). Commutative by the symmetry of the stored components.
inline Vec product(const KOperator& k, const Vec& x, const Vec& y) {
    if (static_cast<int>(x.size()) != k.dim() || static_cast<int>(y.size()) != k.dim())
        throw DimensionMismatch("product arguments do not match operator dimension");
    return k.apply(x, y);
}

// Worst associator norm over basis triples,
//   max_{i,j,k} ‖(e_i∘e_j)∘e_k − e_i∘(e_j∘e_k)‖_g.
// The associator equals the commutator bracket applied to a permuted triple,
// so the same maximum computed from bracket(K) must agree; both are evaluated
// and compared as an internal consistency check.
inline double associativity_residual(const KOperator& k) {
    const int n = k.dim();
    const Metric& g = k.metric();

    double worst_assoc = 0.0;
    std::vector<Vec> basis(n, Vec(n, 0.0));
    for (int i = 0; i < n; ++i) basis[i][i] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const Vec ij = k.apply(basis[i], basis[j]);
            for (int m = 0; m < n; ++m) {
                const Vec left = k.apply(ij, basis[m]);
                const Vec right = k.apply(basis[i], k.apply(basis[j], basis[m]));
                worst_assoc = std::max(worst_assoc, g.norm(sub(left, right)));
            }
        }

    const BracketTensor b = bracket(k);
    double worst_bracket = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int m = 0; m < n; ++m) {
                Vec v(n);
                for (int h = 0; h < n; ++h) v[h] = b.op(h, i, j, m);
                worst_bracket = std::max(worst_bracket, g.norm(v));
            }

    if (std::abs(worst_assoc - worst_bracket) > 1e-10 * std::max(1.0, worst_assoc))
        throw Error("associator and commutator residuals disagree: " +
                    std::to_string(worst_assoc) + " vs " + std::to_string(worst_bracket));
    return worst_assoc;
}

// Scale-free size of the commutator bracket, used as the associativity
// precondition by everything that needs a commuting family.
inline double bracket_residual(const KOperator& k) {
    const double c_scale = max_abs(lower_index(k, k.metric()).entries());
    return max_abs(bracket(k).s) / std::max(1.0, c_scale * c_scale);
}

namespace detail {

// Lowered cubic form rewritten in g-orthonormal coordinates: with g = LLᵀ and
// v = L^{-ᵀ}u, returns Ĉ_abc = C(L^{-ᵀ}e_a, L^{-ᵀ}e_b, L^{-ᵀ}e_c) together
// with the back-substitution matrix T = L^{-ᵀ}.
struct OrthoForm {
    Tensor3 c;  // cubic form, Euclidean metric
    Mat back;   // maps orthonormal coordinates to original ones
};

inline OrthoForm orthonormal_form(const KOperator& k) {
    const int n = k.dim();
    const Metric& g = k.metric();
    const CubicTensor c = lower_index(k, g);

    // invert the lower-triangular Cholesky factor by forward substitution
    const Mat& l = g.cholesky_factor();
    Mat linv(n, n);
    for (int j = 0; j < n; ++j) {
        linv(j, j) = 1.0 / l(j, j);
        for (int i = j + 1; i < n; ++i) {
            double s = 0.0;
            for (int m = j; m < i; ++m) s += l(i, m) * linv(m, j);
            linv(i, j) = -s / l(i, i);
        }
    }
    Mat t = transpose(linv);  // T = L^{-ᵀ}

    Tensor3 ct(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int cc = 0; cc < n; ++cc) {
                double s = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int m = 0; m < n; ++m)
                            s += c(i, j, m) * t(i, a) * t(j, b) * t(m, cc);
                ct(a, b, cc) = s;
            }
    return OrthoForm{std::move(ct), std::move(t)};
}

// Matrix of the operator u ↦ K̂(w, u) of the orthonormal-coordinate form.
inline Mat direction_matrix(const Tensor3& c, const Vec& w) {
    const int n = c.dim();
    Mat m(n, n);
    for (int b = 0; b < n; ++b)
        for (int cc = 0; cc < n; ++cc) {
            double s = 0.0;
            for (int a = 0; a < n; ++a) s += c(a, b, cc) * w[a];
            m(b, cc) = s;
        }
    return m;
}

// Restriction of the cubic form to the span of the (orthonormal) columns of q.
inline Tensor3 restrict_form(const Tensor3& c, const Mat& q) {
    const int n = c.dim();
    const int m = q.cols();
    Tensor3 r(m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int cc = 0; cc < m; ++cc) {
                double s = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k)
                            s += c(i, j, k) * q(i, a) * q(j, b) * q(k, cc);
                r(a, b, cc) = s;
            }
    return r;
}

inline double form_eval(const Tensor3& c, const Vec& w) {
    const int n = c.dim();
    double s = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int cc = 0; cc < n; ++cc) s += c(a, b, cc) * w[a] * w[b] * w[cc];
    return s;
}

// Splits the columns [lo, hi) of q, assumed to span an invariant subspace,
// by diagonalizing the operator of a fresh random direction drawn inside that
// subspace; recurses into eigenvalue clusters (gap below 1e-8 times the
// spectral radius). Repeated total eigenvalues of the family — e.g. a
// multi-dimensional kernel — stop splitting and are accepted as a block; the
// caller's postcondition check has the final word.
inline void split_columns(const Tensor3& c, Mat& q, int lo, int hi, Rng& rng, int depth) {
    const int m = hi - lo;
    if (m <= 1 || depth <= 0) return;
    const int n = q.rows();

    Mat p(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) p(i, j) = q(i, lo + j);

    const Vec wr = rng.unit_vec(m);
    const Vec w_full = matvec(p, wr);
    const Mat full = direction_matrix(c, w_full);
    // restricted operator PᵀK̂(w)P — symmetric because the columns of p are
    // orthonormal and the operator is self-adjoint
    Mat red(m, m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s += p(i, a) * full(i, j) * p(j, b);
            red(a, b) = s;
        }
    for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b) {
            const double v = 0.5 * (red(a, b) + red(b, a));
            red(a, b) = red(b, a) = v;
        }

    const EigenSym eig = jacobi_eigensym(red);
    const Mat rotated = matmul(p, eig.vectors);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) q(i, lo + j) = rotated(i, j);

    const double radius = std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
    const double gap_floor = 1e-8 * std::max(radius, 1e-300);
    int start = 0;
    for (int j = 1; j <= m; ++j) {
        const bool boundary = (j == m) || (eig.values[j - 1] - eig.values[j] > gap_floor);
        if (!boundary) continue;
        if (j - start > 1) split_columns(c, q, lo + start, lo + j, rng, depth - 1);
        start = j;
    }
}

}  // namespace detail

// Simultaneous diagonalization of the commuting family {K_X}: a random
// generic direction separates the joint eigenvectors, with recursive
// refinement inside eigenvalue clusters. Basis vectors are sign-chosen so
// every λ_i is nonnegative (flipping e negates λ); vectors with λ ≈ 0 get the
// largest-magnitude component made positive instead. Ordering: λ descending,
// ties broken lexicographically by components.
inline SpectralData simultaneous_diagonalize(const KOperator& k, const Metric& g,
                                             std::uint64_t seed = 20240817,
                                             double bracket_tol = 1e-8) {
    if (k.dim() != g.dim())
        throw DimensionMismatch("operator dim does not match metric dim");
    const double br = bracket_residual(k);
    if (br > bracket_tol)
        throw NotCommuting("operator family does not commute: bracket residual " +
                           std::to_string(br) + " exceeds " + std::to_string(bracket_tol));

    const int n = k.dim();
    const detail::OrthoForm of = detail::orthonormal_form(k);
    Rng rng(seed);

    Mat q = Mat::identity(n);
    detail::split_columns(of.c, q, 0, n, rng, n + 2);

    // λ_i from the diagonal of the form; sign convention as documented
    Vec lam(n);
    std::vector<Vec> cols(n, Vec(n));
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) cols[j][i] = q(i, j);
    for (int j = 0; j < n; ++j) lam[j] = detail::form_eval(of.c, cols[j]);
    double scale = std::max(1.0, max_abs(lam));
    for (int j = 0; j < n; ++j) {
        if (lam[j] < -1e-12 * scale) {
            for (double& v : cols[j]) v = -v;
            lam[j] = -lam[j];
        } else if (std::abs(lam[j]) <= 1e-12 * scale) {
            int big = 0;
            for (int i = 1; i < n; ++i)
                if (std::abs(cols[j][i]) > std::abs(cols[j][big])) big = i;
            if (cols[j][big] < 0.0)
                for (double& v : cols[j]) v = -v;
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (lam[a] != lam[b]) return lam[a] > lam[b];
        return cols[a] < cols[b];
    });

    // verify the product relations before leaving orthonormal coordinates
    double worst = 0.0;
    double min_gap = -1.0;
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            Vec v(n, 0.0);
            for (int h = 0; h < n; ++h) {
                double s = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        s += of.c(i, j, h) * cols[order[a]][i] * cols[order[b]][j];
                v[h] = s;
            }
            if (a == b) v = sub(v, scaled(lam[order[a]], cols[order[a]]));
            worst = std::max(worst, norm2(v));
        }
        if (a + 1 < n) {
            const double gap = lam[order[a]] - lam[order[a + 1]];
            min_gap = (min_gap < 0.0) ? gap : std::min(min_gap, gap);
        }
    }
    if (worst > 1e-9 * scale)
        throw NotCommuting("joint diagonalization failed: residual " + std::to_string(worst) +
                           ", smallest eigenvalue gap " + std::to_string(min_gap));

    SpectralData out;
    out.dim = n;
    out.basis = Mat(n, n);
    out.lambda.resize(n);
    out.mu.assign(n, 0.0);
    out.a_seq.assign(n + 1, 0.0);
    for (int j = 0; j < n; ++j) {
        out.lambda[j] = lam[order[j]];
        const Vec e = matvec(of.back, cols[order[j]]);
        for (int i = 0; i < n; ++i) out.basis(i, j) = e[i];
    }
    return out;
}

namespace detail {

// Shifted symmetric power iteration for a local maximum of Φ(w) = C(w,w,w) on
// the unit sphere: w ← normalize(K̂(w,w) + σw) with σ = 1 + ‖C‖_F keeps Φ
// monotone along the iteration. Returns the converged point, or empty when
// the iteration fails to settle.
inline std::optional<Vec> sphere_climb(const Tensor3& c, Vec w, double sigma, int max_iters) {
    const int m = c.dim();
    for (int it = 0; it < max_iters; ++it) {
        Vec next(m, 0.0);
        for (int b = 0; b < m; ++b) {
            double s = 0.0;
            for (int a = 0; a < m; ++a)
                for (int cc = 0; cc < m; ++cc) s += c(a, b, cc) * w[a] * w[cc];
            next[b] = s + sigma * w[b];
        }
        const double r = norm2(next);
        if (r < 1e-300) return std::nullopt;
        for (double& v : next) v /= r;
        const double step = norm2(sub(next, w));
        w = std::move(next);
        if (step < 1e-12) return w;
    }
    return std::nullopt;
}

// Orthonormal complement of a unit vector: the last m-1 columns of the
// Householder reflector that maps w to ∓e_1.
inline Mat householder_complement(const Vec& w) {
    const int m = static_cast<int>(w.size());
    const double s = (w[0] >= 0.0) ? 1.0 : -1.0;
    Vec v(w);
    v[0] += s;
    const double vv = dot(v, v);
    Mat z(m, m - 1);
    for (int i = 0; i < m; ++i)
        for (int j = 1; j < m; ++j)
            z(i, j - 1) = (i == j ? 1.0 : 0.0) - 2.0 * v[i] * v[j] / vv;
    return z;
}

}  // namespace detail

// Recursion sequences (μ_i, A_i) from (λ_i, A): μ_i takes the minus branch
//   μ_i = (λ_i − √(λ_i² − 4A_{i−1}))/2,   A_i = A_{i−1} − μ_i².
// Discriminants below −1e-12 are inadmissible; small negative values are
// clamped to zero as rounding noise.
inline std::pair<Vec, Vec> constant_curvature_sequences(const Vec& lambda, double a0) {
    const int n = static_cast<int>(lambda.size());
    Vec mu(n), a_seq(n + 1);
    a_seq[0] = a0;
    for (int i = 0; i < n; ++i) {
        double disc = lambda[i] * lambda[i] - 4.0 * a_seq[i];
        if (disc < -1e-12)
            throw DiscriminantNegative("discriminant " + std::to_string(disc) +
                                           " negative at index " + std::to_string(i + 1),
                                       i + 1);
        disc = std::max(disc, 0.0);
        mu[i] = 0.5 * (lambda[i] - std::sqrt(disc));
        a_seq[i + 1] = a_seq[i] - mu[i] * mu[i];
    }
    return {std::move(mu), std::move(a_seq)};
}

// Builds the operator family with constant sectional K-curvature A from the
// eigenvalue list λ, using the identity metric:
//   K(e_i,e_i) = λ_i e_i + Σ_{k<i} μ_k e_k,   K(e_i,e_j) = μ_{min} e_{max}.
inline KOperator build_constant_curvature_K(const Vec& lambda, double a0) {
    const int n = static_cast<int>(lambda.size());
    if (n < 1) throw DimensionMismatch("need at least one eigenvalue");
    const auto [mu, a_seq] = constant_curvature_sequences(lambda, a0);

    Tensor3 c(n);
    for (int i = 0; i < n; ++i) {
        c(i, i, i) = lambda[i];
        for (int j = i + 1; j < n; ++j) {
            // C(e_i, e_j, e_j) and permutations; every other entry vanishes
            c(i, j, j) = c(j, i, j) = c(j, j, i) = mu[i];
        }
    }
    return KOperator(std::move(c), Metric::identity(n));
}

// Opozda's recursion: repeatedly maximize Φ(X) = C(X,X,X) over the unit
// sphere of the remaining subspace, peel off the maximizer, and continue in
// its orthogonal complement. Requires the structure to have constant
// sectional K-curvature A (verified against check_constant_curvature before
// starting). The best local maximum over the restart budget is taken and the
// winning restart index recorded per step.
inline SpectralData opozda_basis(const KOperator& k, const Metric& g, double a0,
                                 std::uint64_t seed = 20240817, int restarts = 32,
                                 double pre_tol = 1e-6) {
    if (k.dim() != g.dim())
        throw DimensionMismatch("operator dim does not match metric dim");
    const int n = k.dim();

    const std::optional<double> fitted = check_constant_curvature(k, g, pre_tol);
    if (!fitted)
        throw NotConstantCurvature("sectional K-curvature is not constant within " +
                                   std::to_string(pre_tol));
    if (std::abs(*fitted - a0) > pre_tol * std::max(1.0, std::abs(a0)))
        throw NotConstantCurvature("sectional K-curvature is " + std::to_string(*fitted) +
                                   ", not the requested " + std::to_string(a0));

    const detail::OrthoForm of = detail::orthonormal_form(k);
    Rng rng(seed);

    SpectralData out;
    out.dim = n;
    out.basis = Mat(n, n);
    out.lambda.resize(n);
    out.mu.resize(n);
    out.a_seq.resize(n + 1);
    out.a_seq[0] = a0;
    out.winning_restarts.resize(n);

    Mat q = Mat::identity(n);  // orthonormal columns spanning the remaining subspace
    std::vector<Vec> picked;   // maximizers, orthonormal coordinates

    for (int step = 0; step < n; ++step) {
        const int m = n - step;
        const Tensor3 cw = detail::restrict_form(of.c, q);

        Vec best;
        double best_phi = 0.0;
        int best_restart = -1;
        if (m == 1) {
            // S⁰ = {±1}: the maximizer is the sign making Φ nonnegative
            const double phi = cw(0, 0, 0);
            best = Vec{phi >= 0.0 ? 1.0 : -1.0};
            best_phi = std::abs(phi);
            best_restart = 0;
        } else {
            const double sigma = 1.0 + frobenius_norm(cw);
            for (int t = 0; t < restarts; ++t) {
                auto w = detail::sphere_climb(cw, rng.unit_vec(m), sigma, 5000);
                if (!w) continue;
                const double phi = detail::form_eval(cw, *w);
                if (best_restart < 0 || phi > best_phi + 1e-14 * std::max(1.0, std::abs(phi))) {
                    best = *w;
                    best_phi = phi;
                    best_restart = t;
                }
            }
            if (best_restart < 0)
                throw MaximizationFailed("no sphere-maximization restart converged at step " +
                                         std::to_string(step + 1));
        }

        out.lambda[step] = best_phi;
        out.winning_restarts[step] = best_restart;

        double disc = best_phi * best_phi - 4.0 * out.a_seq[step];
        if (disc < -1e-12)
            throw DiscriminantNegative("discriminant " + std::to_string(disc) +
                                           " negative at index " + std::to_string(step + 1),
                                       step + 1);
        disc = std::max(disc, 0.0);
        out.mu[step] = 0.5 * (best_phi - std::sqrt(disc));
        out.a_seq[step + 1] = out.a_seq[step] - out.mu[step] * out.mu[step];

        picked.push_back(matvec(q, best));
        if (m > 1) q = matmul(q, detail::householder_complement(best));
    }

    // the recursion data must reproduce the form on the recovered basis
    const double rec_scale =
        std::max({1.0, max_abs(out.lambda), max_abs(out.mu)});
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int m2 = j; m2 < n; ++m2) {
                double expect = 0.0;
                if (i == j && j == m2) expect = out.lambda[i];
                else if (i < j && j == m2) expect = out.mu[i];
                double measured = 0.0;
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        for (int cc = 0; cc < n; ++cc)
                            measured += of.c(a, b, cc) * picked[i][a] * picked[j][b] *
                                        picked[m2][cc];
                worst = std::max(worst, std::abs(measured - expect));
            }
    if (worst > 1e-8 * rec_scale)
        throw MaximizationFailed("recovered basis does not reproduce the operator family: "
                                 "residual " +
                                 std::to_string(worst));

    for (int j = 0; j < n; ++j) {
        const Vec e = matvec(of.back, picked[j]);
        for (int i = 0; i < n; ++i) out.basis(i, j) = e[i];
    }
    return out;
}

// The unit of the product, e = Σ (1/λ_i) e_i, when it exists, built from an
// already-diagonalized family. A vanishing λ_i means K_e can never be the
// identity, so the unit is reported absent.
inline std::optional<Vec> unit(const SpectralData& sd) {
    const double scale = std::max(1.0, max_abs(sd.lambda));
    const int n = sd.dim;
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        if (std::abs(sd.lambda[j]) <= 1e-9 * scale) return std::nullopt;
        for (int i = 0; i < n; ++i) e[i] += sd.basis(i, j) / sd.lambda[j];
    }
    return e;
}

// Convenience form: requires a commuting family (within bracket_tol) before
// diagonalizing.
inline std::optional<Vec> unit(const KOperator& k, const Metric& g, double bracket_tol = 1e-8) {
    const double br = bracket_residual(k);
    if (br > bracket_tol)
        throw NotAssociative("product is not associative: bracket residual " +
                             std::to_string(br) + " exceeds " + std::to_string(bracket_tol));
    return unit(simultaneous_diagonalize(k, g, 20240817, bracket_tol));
}

// Canonical idempotents u_i = e_i/λ_i: u_i∘u_i = u_i and u_i∘u_j = 0. Errors
// out when some λ_i is numerically zero.
inline IdempotentFrame canonical_idempotents(const SpectralData& sd, const Metric& g) {
    const int n = sd.dim;
    const double scale = std::max(1.0, max_abs(sd.lambda));

    IdempotentFrame frame;
    frame.dim = n;
    frame.u = Mat(n, n);
    frame.norms.resize(n);
    for (int j = 0; j < n; ++j) {
        if (std::abs(sd.lambda[j]) <= 1e-9 * scale)
            throw DegenerateOperator("eigenvalue " + std::to_string(j + 1) +
                                     " is numerically zero; no idempotent in that direction");
        Vec u(n);
        for (int i = 0; i < n; ++i) u[i] = sd.basis(i, j) / sd.lambda[j];
        for (int i = 0; i < n; ++i) frame.u(i, j) = u[i];
        frame.norms[j] = g.inner(u, u);
    }
    return frame;
}

inline IdempotentFrame canonical_idempotents(const KOperator& k, const Metric& g,
                                             double bracket_tol = 1e-8) {
    return canonical_idempotents(simultaneous_diagonalize(k, g, 20240817, bracket_tol), g);
}

// ---------------------------------------------------------------------------
// Point-cloud rigidity diagnostics
// ---------------------------------------------------------------------------

// Numerical samples of the quantities appearing in the parallel-frame
// rigidity statements: the covariant derivative of C (norm and slot
// asymmetry), the covariant derivative of the trace field E, the matrix
// f_ij = g(D_{u_i} u_j, u_j), the worst ‖D_{u_i} u_j‖_g, and difference
// quotients of the idempotent norms g(u_i,u_i) across a sampled point cloud.
struct RigidityReport {
    Vec base_point;
    double nabla_c_norm = 0.0;
    double nabla_c_asymmetry = 0.0;
    double nabla_e_norm = 0.0;
    Mat f_entries;            // f_ij = g(D_{u_i} u_j, u_j) at the base point
    double u_parallel_defect = 0.0;  // max_{i,j} ‖D_{u_i} u_j‖_g
    Vec u_norm_gradients;     // per i: max |g_y(u_i,u_i) − g_x(u_i,u_i)| / ‖y−x‖
    int cloud_size = 0;
};

namespace detail {

// Idempotent frame of the chart at y, with columns permuted to line up with
// the reference frame by maximal overlap. The idempotents themselves carry no
// sign freedom (e → −e flips λ and leaves e/λ unchanged), so a permutation is
// all the matching needs.
inline Mat matched_idempotents(const ChartField& chart, const Vec& y, const Mat& reference,
                               double bracket_tol) {
    const auto [g, c] = chart.evaluate(y);
    const KOperator k = raise_index(c, g);
    const IdempotentFrame frame = canonical_idempotents(k, g, bracket_tol);
    const int n = frame.dim;

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::vector<int> best = perm;
    double best_score = -1.0;
    do {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            double o = 0.0;
            for (int r = 0; r < n; ++r) o += reference(r, i) * frame.u(r, perm[i]);
            s += std::abs(o);
        }
        if (s > best_score) {
            best_score = s;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    Mat out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = frame.u(i, best[j]);
    return out;
}

}  // namespace detail

// Samples `cloud` points of the chart's domain, computes the matched
// idempotent frame at each, and reports the rigidity quantities. The frame
// derivative uses a central difference along each u_i with the Levi-Civita
// correction at the base point.
inline RigidityReport rigidity_diagnostics(const ChartField& chart, const Vec& x, int cloud = 20,
                                           std::uint64_t seed = 20240817,
                                           double bracket_tol = 1e-6) {
    const int n = chart.dim();
    const auto [g, c] = chart.evaluate(x);
    const KOperator k = raise_index(c, g);
    const IdempotentFrame base = canonical_idempotents(k, g, bracket_tol);
    const Christoffel hat = levi_civita(chart, x);

    RigidityReport rep;
    rep.base_point = x;
    const CovariantCubic nc = covariant_derivative_C(chart, x);
    rep.nabla_c_norm = nc.norm;
    rep.nabla_c_asymmetry = nc.asymmetry;
    rep.nabla_e_norm = trace_field_E(chart, x).nabla_norm;
    rep.f_entries = Mat(n, n);

    // D_{u_i} u_j via a central difference of the matched frame field
    const double t = 1e-3;
    for (int i = 0; i < n; ++i) {
        Vec ui(n);
        for (int r = 0; r < n; ++r) ui[r] = base.u(r, i);
        const Mat fwd = detail::matched_idempotents(chart, axpy(t, ui, x), base.u, bracket_tol);
        const Mat bwd = detail::matched_idempotents(chart, axpy(-t, ui, x), base.u, bracket_tol);
        for (int j = 0; j < n; ++j) {
            Vec cov(n);
            for (int h = 0; h < n; ++h) {
                double v = (fwd(h, j) - bwd(h, j)) / (2.0 * t);
                for (int a = 0; a < n; ++a)
                    for (int b = 0; b < n; ++b)
                        v += hat.second(h, a, b) * ui[a] * base.u(b, j);
                cov[h] = v;
            }
            Vec uj(n);
            for (int r = 0; r < n; ++r) uj[r] = base.u(r, j);
            rep.f_entries(i, j) = g.inner(cov, uj);
            rep.u_parallel_defect = std::max(rep.u_parallel_defect, g.norm(cov));
        }
    }

    // idempotent norms across the cloud
    rep.u_norm_gradients.assign(n, 0.0);
    Vec base_norms(n);
    for (int j = 0; j < n; ++j) {
        Vec uj(n);
        for (int r = 0; r < n; ++r) uj[r] = base.u(r, j);
        base_norms[j] = g.inner(uj, uj);
    }
    Rng rng(seed);
    for (int p = 0; p < cloud; ++p) {
        const Vec y = chart.sample_point(rng);
        const double dist = norm2(sub(y, x));
        if (dist < 1e-9) continue;
        const auto [gy, cy] = chart.evaluate(y);
        const Mat uy = detail::matched_idempotents(chart, y, base.u, bracket_tol);
        for (int j = 0; j < n; ++j) {
            Vec uj(n);
            for (int r = 0; r < n; ++r) uj[r] = uy(r, j);
            rep.u_norm_gradients[j] = std::max(
                rep.u_norm_gradients[j], std::abs(gy.inner(uj, uj) - base_norms[j]) / dist);
        }
        ++rep.cloud_size;
    }
    return rep;
}

}  // namespace statfrob
