#pragma once

// Small dense linear algebra sized for chart dimensions (n <= 32):
// row-major matrices, rank-3/4 arrays, Cholesky and LU factorizations,
// a cyclic Jacobi symmetric eigensolver, and seeded sampling helpers.
// Everything is value-semantic; nothing here allocates outside std::vector.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <utility>
#include <vector>

#include "statfrob/errors.hpp"

namespace statfrob {

using Vec = std::vector<double>;

class Mat {
  public:
    Mat() = default;
    Mat(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {}

    static Mat identity(int n) {
        Mat m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

  private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

// Dense rank-3 array, index (i,j,k), all extents equal.
class Tensor3 {
  public:
    Tensor3() = default;
    explicit Tensor3(int n, double fill = 0.0)
        : n_(n), a_(static_cast<std::size_t>(n) * n * n, fill) {}

    int dim() const { return n_; }
    double& operator()(int i, int j, int k) {
        return a_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k];
    }
    double operator()(int i, int j, int k) const {
        return a_[(static_cast<std::size_t>(i) * n_ + j) * n_ + k];
    }
    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

  private:
    int n_ = 0;
    std::vector<double> a_;
};

// Dense rank-4 array, index (i,j,k,l), all extents equal.
class Tensor4 {
  public:
    Tensor4() = default;
    explicit Tensor4(int n, double fill = 0.0)
        : n_(n), a_(static_cast<std::size_t>(n) * n * n * n, fill) {}

    int dim() const { return n_; }
    double& operator()(int i, int j, int k, int l) {
        return a_[((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    double operator()(int i, int j, int k, int l) const {
        return a_[((static_cast<std::size_t>(i) * n_ + j) * n_ + k) * n_ + l];
    }
    const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

  private:
    int n_ = 0;
    std::vector<double> a_;
};

// -- elementwise helpers ---------------------------------------------------

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}
inline double max_abs(const Mat& m) { return max_abs(m.data()); }
inline double max_abs(const Tensor3& t) { return max_abs(t.data()); }
inline double max_abs(const Tensor4& t) { return max_abs(t.data()); }

inline double frobenius_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}
inline double frobenius_norm(const Mat& m) { return frobenius_norm(m.data()); }
inline double frobenius_norm(const Tensor3& t) { return frobenius_norm(t.data()); }
inline double frobenius_norm(const Tensor4& t) { return frobenius_norm(t.data()); }

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Vec axpy(double alpha, const Vec& x, const Vec& y) {
    Vec r(y);
    for (std::size_t i = 0; i < x.size(); ++i) r[i] += alpha * x[i];
    return r;
}

inline Vec scaled(double alpha, const Vec& x) {
    Vec r(x);
    for (double& v : r) v *= alpha;
    return r;
}

inline Vec sub(const Vec& a, const Vec& b) {
    Vec r(a);
    for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
    return r;
}

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Vec matvec(const Mat& a, const Vec& x) {
    Vec y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

inline Mat transpose(const Mat& a) {
    Mat t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

inline Mat sub(const Mat& a, const Mat& b) {
    Mat c(a);
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) c(i, j) -= b(i, j);
    return c;
}

// -- Cholesky --------------------------------------------------------------

// Lower-triangular factor of an SPD matrix. Pivot threshold is relative to
// the largest diagonal entry; failure throws NotSpd.
inline Mat cholesky(const Mat& g, double pivot_rel_tol = 1e-12) {
    const int n = g.rows();
    double max_diag = 0.0;
    for (int i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(g(i, i)));
    const double pivot_floor = pivot_rel_tol * std::max(max_diag, 1e-300);

    Mat l(n, n);
    for (int j = 0; j < n; ++j) {
        double d = g(j, j);
        for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (!(d > pivot_floor))
            throw NotSpd("matrix is not positive-definite (pivot " + std::to_string(d) +
                         " at index " + std::to_string(j) + ")");
        l(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i) {
            double s = g(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            l(i, j) = s / l(j, j);
        }
    }
    return l;
}

inline bool is_spd(const Mat& g, double pivot_rel_tol = 1e-12) {
    try {
        cholesky(g, pivot_rel_tol);
        return true;
    } catch (const NotSpd&) {
        return false;
    }
}

// Solve L y = b (forward) then L^T x = y (backward).
inline Vec cholesky_solve(const Mat& l, const Vec& b) {
    const int n = l.rows();
    Vec y(n);
    for (int i = 0; i < n; ++i) {
        double s = b[i];
        for (int k = 0; k < i; ++k) s -= l(i, k) * y[k];
        y[i] = s / l(i, i);
    }
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[k];
        x[i] = s / l(i, i);
    }
    return x;
}

inline Mat spd_inverse(const Mat& g, double pivot_rel_tol = 1e-12) {
    const int n = g.rows();
    const Mat l = cholesky(g, pivot_rel_tol);
    Mat inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vec col = cholesky_solve(l, e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    // symmetrize away rounding
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double v = 0.5 * (inv(i, j) + inv(j, i));
            inv(i, j) = inv(j, i) = v;
        }
    return inv;
}

// -- LU with partial pivoting ---------------------------------------------

struct Lu {
    Mat lu;                // packed factors
    std::vector<int> perm; // row permutation
    int sign = 1;

    double det() const {
        double d = sign;
        for (int i = 0; i < lu.rows(); ++i) d *= lu(i, i);
        return d;
    }
};

inline Lu lu_factor(const Mat& a) {
    const int n = a.rows();
    Lu f{a, std::vector<int>(n), 1};
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(f.lu(k, k));
        for (int i = k + 1; i < n; ++i)
            if (std::abs(f.lu(i, k)) > best) {
                best = std::abs(f.lu(i, k));
                piv = i;
            }
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(f.lu(k, j), f.lu(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
            f.sign = -f.sign;
        }
        const double d = f.lu(k, k);
        if (d == 0.0) continue;  // singular; det() will report 0
        for (int i = k + 1; i < n; ++i) {
            f.lu(i, k) /= d;
            const double m = f.lu(i, k);
            for (int j = k + 1; j < n; ++j) f.lu(i, j) -= m * f.lu(k, j);
        }
    }
    return f;
}

inline Vec lu_solve(const Lu& f, const Vec& b) {
    const int n = f.lu.rows();
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < i; ++k) x[i] -= f.lu(i, k) * x[k];
    for (int i = n - 1; i >= 0; --i) {
        for (int k = i + 1; k < n; ++k) x[i] -= f.lu(i, k) * x[k];
        x[i] /= f.lu(i, i);
    }
    return x;
}

inline Mat lu_inverse(const Lu& f) {
    const int n = f.lu.rows();
    Mat inv(n, n);
    Vec e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        Vec col = lu_solve(f, e);
        for (int i = 0; i < n; ++i) inv(i, j) = col[i];
        e[j] = 0.0;
    }
    return inv;
}

// -- cyclic Jacobi eigensolver for symmetric matrices ----------------------

struct EigenSym {
    Vec values;   // unsorted on exit of the sweep loop; sorted descending here
    Mat vectors;  // columns are eigenvectors, orthonormal
};

inline EigenSym jacobi_eigensym(const Mat& a_in, int max_sweeps = 64) {
    const int n = a_in.rows();
    Mat a(a_in);
    Mat v = Mat::identity(n);

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
        return std::sqrt(2.0 * s);
    };

    const double scale = std::max(frobenius_norm(a), 1e-300);
    for (int sweep = 0; sweep < max_sweeps && off_norm() > 1e-15 * scale; ++sweep) {
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-18 * scale) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(1.0 + theta * theta))
                                     : 1.0 / (theta - std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }

    EigenSym out;
    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = a(i, i);

    // sort descending by eigenvalue, carrying columns along
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](int x, int y) { return out.values[x] > out.values[y]; });
    EigenSym sorted;
    sorted.values.resize(n);
    sorted.vectors = Mat(n, n);
    for (int j = 0; j < n; ++j) {
        sorted.values[j] = out.values[order[j]];
        for (int i = 0; i < n; ++i) sorted.vectors(i, j) = v(i, order[j]);
    }
    return sorted;
}

// -- seeded randomness -----------------------------------------------------

// All randomized routines take one of these; identical seeds give identical
// results on a given platform/build.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(eng_);
    }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng_); }
    int uniform_int(int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(eng_);
    }

    Vec normal_vec(int n) {
        Vec v(n);
        for (double& x : v) x = normal();
        return v;
    }

    Vec unit_vec(int n) {
        for (;;) {
            Vec v = normal_vec(n);
            const double r = norm2(v);
            if (r > 1e-8) return scaled(1.0 / r, v);
        }
    }

    // Haar-ish random orthogonal matrix: Gram-Schmidt on a Gaussian matrix.
    Mat rotation(int n) {
        for (;;) {
            Mat m(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) m(i, j) = normal();
            bool ok = true;
            for (int j = 0; j < n && ok; ++j) {
                for (int k = 0; k < j; ++k) {
                    double s = 0.0;
                    for (int i = 0; i < n; ++i) s += m(i, j) * m(i, k);
                    for (int i = 0; i < n; ++i) m(i, j) -= s * m(i, k);
                }
                double r = 0.0;
                for (int i = 0; i < n; ++i) r += m(i, j) * m(i, j);
                r = std::sqrt(r);
                if (r < 1e-8) {
                    ok = false;
                    break;
                }
                for (int i = 0; i < n; ++i) m(i, j) /= r;
            }
            if (ok) return m;
        }
    }

    Vec point_in_box(const std::vector<std::pair<double, double>>& box) {
        Vec x(box.size());
        for (std::size_t i = 0; i < box.size(); ++i) x[i] = uniform(box[i].first, box[i].second);
        return x;
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace statfrob
