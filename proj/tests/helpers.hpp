#pragma once

// Shared generators for the test suites: random SPD metrics, random
// symmetric cubic forms, and rotated copies of structured operators.

#include <cmath>
#include <vector>

#include "statfrob/linalg.hpp"
#include "statfrob/tensor.hpp"

namespace testutil {

using statfrob::CubicTensor;
using statfrob::KOperator;
using statfrob::Mat;
using statfrob::Metric;
using statfrob::Rng;
using statfrob::Tensor3;
using statfrob::Vec;

// Diagonally dominant symmetric matrix: always SPD.
inline Metric random_metric(Rng& rng, int n, double spread = 0.3) {
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) g(i, j) = g(j, i) = rng.uniform(-spread, spread);
    for (int i = 0; i < n; ++i) g(i, i) += 1.0 + spread * n;
    return Metric(std::move(g));
}

inline CubicTensor random_cubic(Rng& rng, int n, double scale = 1.0) {
    Tensor3 c(n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j)
            for (int k = j; k < n; ++k) {
                const double v = rng.uniform(-scale, scale);
                c(i, j, k) = c(i, k, j) = c(j, i, k) = v;
                c(j, k, i) = c(k, i, j) = c(k, j, i) = v;
            }
    return CubicTensor(c);
}

// C'_abc = C_ijk R_ia R_jb R_kc — the cubic form seen through the rotated
// orthonormal frame. With g = I the metric is unchanged.
inline CubicTensor rotate_cubic(const CubicTensor& c, const Mat& r) {
    const int n = c.dim();
    Tensor3 out(n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int d = 0; d < n; ++d) {
                double s = 0.0;
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        for (int k = 0; k < n; ++k)
                            s += c(i, j, k) * r(i, a) * r(j, b) * r(k, d);
                out(a, b, d) = s;
            }
    return CubicTensor(out, 1e-9);
}

inline KOperator random_k(Rng& rng, int n, double scale = 1.0) {
    const Metric g = random_metric(rng, n);
    return raise_index(random_cubic(rng, n, scale), g);
}

// Diagonal cubic C(i,i,i) = lambda_i seen through a random rotation of the
// orthonormal frame. The operators K_X all commute, so the product is
// associative; the hidden eigenvalues are exactly lambda.
inline KOperator rotated_diagonal_k(Rng& rng, const Vec& lambda) {
    const int n = static_cast<int>(lambda.size());
    Tensor3 c(n);
    for (int i = 0; i < n; ++i) c(i, i, i) = lambda[i];
    const Mat r = rng.rotation(n);
    return raise_index(rotate_cubic(CubicTensor(c), r), Metric::identity(n));
}

}  // namespace testutil
