#pragma once

// Connections and curvature over charts. The Levi-Civita connection comes
// from metric derivatives; the one-parameter family adds a multiple of the
// raised cubic tensor. Curvature is assembled from finite differences of
// the connection coefficients in the convention
//
//   R(X,Y)Z = D_X D_Y Z - D_Y D_X Z - D_[X,Y] Z,
//   lowered R_ijkl = g(R(e_i,e_j) e_l, e_k),
//
// so the duality identity between the two flat-candidate connections reads
// R_ijkl + Rbar_ijlk = 0 with no extra signs. The identity suite evaluates
// the coefficient fields once per stencil point and reuses them for every
// connection parameter; the derivative of (hat + alpha*K) is assembled by
// linearity of the stencil.

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "statfrob/chart.hpp"
#include "statfrob/errors.hpp"
#include "statfrob/linalg.hpp"
#include "statfrob/tensor.hpp"

namespace statfrob {

struct Christoffel {
    Tensor3 first;   // first(i,j,k)  = Gamma_{ij,k} = g(D_{e_i} e_j, e_k)
    Tensor3 second;  // second(h,i,j) = Gamma^h_ij
    int dim() const { return second.dim(); }
};

struct CurvatureTensor {
    Tensor4 upper;    // upper(l,i,j,k): component l of R(e_i,e_j) e_k
    Tensor4 lowered;  // lowered(i,j,k,l) = g(R(e_i,e_j) e_l, e_k)
    int dim() const { return upper.dim(); }

    double antisymmetry_defect() const {  // in the (X,Y) argument pair
        const int n = upper.dim();
        double worst = 0.0;
        for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        worst = std::max(worst, std::abs(upper(l, i, j, k) + upper(l, j, i, k)));
        return worst;
    }
};

namespace detail {

// Base step for differentiating derived fields (connection coefficients,
// cubic entries, the trace field). Coarser than the first-derivative default
// because those fields may themselves carry FD noise; two Richardson rounds
// keep the truncation error far below the noise floor.
constexpr double kFieldStep = 1e-2;

inline Metric metric_at(const ChartField& chart, const Vec& x) {
    try {
        return Metric(chart.metric_entries(x));
    } catch (const NotSpd& e) {
        throw NotSpdAtPoint(std::string(e.what()) + " at point " + format_point(x));
    }
}

// Entrywise derivative of a flattened field along every axis: 4-point
// central stencils at steps s and s/2 with one Richardson fold.
inline std::vector<std::vector<double>> field_axis_derivatives(
    const std::function<std::vector<double>(const Vec&)>& f, const Vec& x) {
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> out(n);
    for (int a = 0; a < n; ++a) {
        const double s = kFieldStep * std::max(1.0, std::abs(x[a]));
        auto at = [&](double t) {
            Vec y(x);
            y[a] += t;
            return f(y);
        };
        const std::vector<double> p1 = at(s), m1 = at(-s), p2 = at(s / 2), m2 = at(-s / 2);
        std::vector<double> d(p1.size());
        for (std::size_t t = 0; t < d.size(); ++t) {
            const double coarse = (p1[t] - m1[t]) / (2.0 * s);
            const double fine = (p2[t] - m2[t]) / s;
            d[t] = (4.0 * fine - coarse) / 3.0;
        }
        out[a] = std::move(d);
    }
    return out;
}

// Raised cubic tensor K^h_ij at a point, as a bare array.
inline Tensor3 raised_cubic(const ChartField& chart, const Vec& x) {
    const Metric g = metric_at(chart, x);
    const Tensor3 c = chart.cubic_entries(x);
    const int n = g.dim();
    const Mat& gi = g.inverse();
    Tensor3 k(n);
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int m = 0; m < n; ++m) s += gi(h, m) * c(i, j, m);
                k(h, i, j) = s;
            }
    return k;
}

inline Tensor3 hat_second_kind(const ChartField& chart, const Vec& x) {
    const Metric g = metric_at(chart, x);
    const Tensor3 dg = chart.dmetric(x);
    const int n = g.dim();
    Tensor3 second(n);
    const Mat& gi = g.inverse();
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k)
                    s += gi(h, k) * 0.5 * (dg(i, j, k) + dg(j, i, k) - dg(k, i, j));
                second(h, i, j) = s;
            }
    return second;
}

// Everything the curvature assembly needs at one point: the two coefficient
// fields and their axis derivatives (shared across connection parameters).
struct ConnDerivatives {
    int n = 0;
    Tensor3 hat;                 // Levi-Civita second kind at x
    Tensor3 k;                   // raised cubic at x
    std::vector<Tensor3> d_hat;  // per axis
    std::vector<Tensor3> d_k;    // per axis
};

inline ConnDerivatives connection_derivatives(const ChartField& chart, const Vec& x) {
    const int n = chart.dim();
    ConnDerivatives cd;
    cd.n = n;
    cd.hat = hat_second_kind(chart, x);
    cd.k = raised_cubic(chart, x);

    auto both = [&](const Vec& y) {
        const Tensor3 h = hat_second_kind(chart, y);
        const Tensor3 kk = raised_cubic(chart, y);
        std::vector<double> flat(h.data());
        flat.insert(flat.end(), kk.data().begin(), kk.data().end());
        return flat;
    };
    const auto d = field_axis_derivatives(both, x);
    const std::size_t block = cd.hat.data().size();
    cd.d_hat.assign(n, Tensor3(n));
    cd.d_k.assign(n, Tensor3(n));
    for (int a = 0; a < n; ++a) {
        for (std::size_t t = 0; t < block; ++t) {
            cd.d_hat[a].data()[t] = d[a][t];
            cd.d_k[a].data()[t] = d[a][block + t];
        }
    }
    return cd;
}

inline CurvatureTensor curvature_from(const ConnDerivatives& cd, const Metric& g, double alpha) {
    const int n = cd.n;
    Tensor3 gamma(n);
    for (std::size_t t = 0; t < gamma.data().size(); ++t)
        gamma.data()[t] = cd.hat.data()[t] + alpha * cd.k.data()[t];

    std::vector<Tensor3> dgamma(n, Tensor3(n));
    for (int a = 0; a < n; ++a)
        for (std::size_t t = 0; t < gamma.data().size(); ++t)
            dgamma[a].data()[t] = cd.d_hat[a].data()[t] + alpha * cd.d_k[a].data()[t];

    CurvatureTensor r{Tensor4(n), Tensor4(n)};
    for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    double s = dgamma[i](l, j, k) - dgamma[j](l, i, k);
                    for (int m = 0; m < n; ++m)
                        s += gamma(l, i, m) * gamma(m, j, k) - gamma(l, j, m) * gamma(m, i, k);
                    r.upper(l, i, j, k) = s;
                }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double s = 0.0;
                    for (int h = 0; h < n; ++h) s += g(k, h) * r.upper(h, i, j, l);
                    r.lowered(i, j, k, l) = s;
                }
    return r;
}

}  // namespace detail

inline Christoffel levi_civita(const ChartField& chart, const Vec& x) {
    const Metric g = detail::metric_at(chart, x);
    const Tensor3 dg = chart.dmetric(x);
    const int n = g.dim();
    Christoffel out{Tensor3(n), Tensor3(n)};
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                out.first(i, j, k) = 0.5 * (dg(i, j, k) + dg(j, i, k) - dg(k, i, j));
    const Mat& gi = g.inverse();
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int k = 0; k < n; ++k) s += gi(h, k) * out.first(i, j, k);
                out.second(h, i, j) = s;
            }
    return out;
}

// The one-parameter family: hat + alpha * K. First kind gains alpha * C, so
// the parameter/-parameter pair averages back to the Levi-Civita symbols by
// construction, not merely to FD accuracy.
inline Christoffel alpha_connection(const ChartField& chart, const Vec& x, double alpha) {
    Christoffel conn = levi_civita(chart, x);
    if (alpha == 0.0) return conn;
    const Metric g = detail::metric_at(chart, x);
    const Tensor3 c = chart.cubic_entries(x);
    const int n = g.dim();
    const Mat& gi = g.inverse();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) conn.first(i, j, k) += alpha * c(i, j, k);
    for (int h = 0; h < n; ++h)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int m = 0; m < n; ++m) s += gi(h, m) * c(i, j, m);
                conn.second(h, i, j) += alpha * s;
            }
    return conn;
}

inline CurvatureTensor curvature(const ChartField& chart, const Vec& x, double alpha) {
    const auto cd = detail::connection_derivatives(chart, x);
    const Metric g = detail::metric_at(chart, x);
    return detail::curvature_from(cd, g, alpha);
}

struct IdentityReport {
    Vec point;
    double duality = 0.0;     // R_ijkl + Rbar_ijlk
    double gauss = 0.0;       // R + Rbar - 2 Rhat - 2 [K,K]
    double codazzi = 0.0;     // R - Rbar - 2 alternation of the K-derivative
    double zhang = 0.0;       // interpolation formula, worst over the alpha grid
    double zhang_skew = 0.0;  // R^(a) - R^(-a) = a (R - Rbar), worst over {1/2, 2}
    std::vector<std::pair<std::string, double>> detail;  // per-alpha residuals
    double tol = 1e-4;
    bool pass = false;

    double max_residual() const {
        double m = duality;
        m = std::max(m, gauss);
        m = std::max(m, codazzi);
        m = std::max(m, zhang);
        m = std::max(m, zhang_skew);
        return m;
    }
};

inline IdentityReport identity_suite(const ChartField& chart, const Vec& x, double tol = 1e-4) {
    const int n = chart.dim();
    const auto cd = detail::connection_derivatives(chart, x);
    const Metric g = detail::metric_at(chart, x);
    const CubicTensor c(chart.cubic_entries(x));
    const KOperator k = raise_index(c, g);
    const Tensor4 s = bracket(k).s;

    auto r_at = [&](double alpha) { return detail::curvature_from(cd, g, alpha); };
    const CurvatureTensor r = r_at(1.0);
    const CurvatureTensor rbar = r_at(-1.0);
    const CurvatureTensor rhat = r_at(0.0);

    // residual = ||difference||_F / max(1, largest participating norm)
    auto normalized = [&](double diff_norm, std::initializer_list<double> participants) {
        double scale = 1.0;
        for (double p : participants) scale = std::max(scale, p);
        return diff_norm / scale;
    };
    const double nr = frobenius_norm(r.lowered);
    const double nrbar = frobenius_norm(rbar.lowered);
    const double nrhat = frobenius_norm(rhat.lowered);
    const double ns = frobenius_norm(s);

    IdentityReport rep;
    rep.point = x;
    rep.tol = tol;

    {  // duality
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int kk = 0; kk < n; ++kk)
                    for (int l = 0; l < n; ++l) {
                        const double d = r.lowered(i, j, kk, l) + rbar.lowered(i, j, l, kk);
                        acc += d * d;
                    }
        rep.duality = normalized(std::sqrt(acc), {nr, nrbar});
    }

    {  // gauss-type relation
        double acc = 0.0;
        for (std::size_t t = 0; t < s.data().size(); ++t) {
            const double d = r.lowered.data()[t] + rbar.lowered.data()[t] -
                             2.0 * rhat.lowered.data()[t] - 2.0 * s.data()[t];
            acc += d * d;
        }
        rep.gauss = normalized(std::sqrt(acc), {nr, nrbar, nrhat, ns});
    }

    {  // codazzi-type relation, via the covariant derivative of K
        std::vector<Tensor3> nk(n, Tensor3(n));
        for (int a = 0; a < n; ++a)
            for (int h = 0; h < n; ++h)
                for (int b = 0; b < n; ++b)
                    for (int cidx = 0; cidx < n; ++cidx) {
                        double v = cd.d_k[a](h, b, cidx);
                        for (int m = 0; m < n; ++m)
                            v += cd.hat(h, a, m) * cd.k(m, b, cidx) -
                                 cd.hat(m, a, b) * cd.k(h, m, cidx) -
                                 cd.hat(m, a, cidx) * cd.k(h, b, m);
                        nk[a](h, b, cidx) = v;
                    }
        double acc = 0.0, nalt = 0.0;
        for (int h = 0; h < n; ++h)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int kk = 0; kk < n; ++kk) {
                        const double alt = 2.0 * (nk[i](h, j, kk) - nk[j](h, i, kk));
                        const double d = r.upper(h, i, j, kk) - rbar.upper(h, i, j, kk) - alt;
                        acc += d * d;
                        nalt += alt * alt;
                    }
        rep.codazzi = normalized(std::sqrt(acc),
                                 {frobenius_norm(r.upper), frobenius_norm(rbar.upper),
                                  std::sqrt(nalt)});
    }

    {  // interpolation formula and its skew consequence
        const double alphas[] = {0.0, 0.5, -0.5, 2.0, -2.0};
        for (double a : alphas) {
            const CurvatureTensor ra = r_at(a);
            double acc = 0.0;
            for (std::size_t t = 0; t < s.data().size(); ++t) {
                const double rhs = 0.5 * (1.0 + a) * r.lowered.data()[t] +
                                   0.5 * (1.0 - a) * rbar.lowered.data()[t] -
                                   (1.0 - a * a) * s.data()[t];
                const double d = ra.lowered.data()[t] - rhs;
                acc += d * d;
            }
            const double res =
                normalized(std::sqrt(acc), {frobenius_norm(ra.lowered), nr, nrbar, ns});
            rep.detail.emplace_back("interp[alpha=" + std::to_string(a) + "]", res);
            rep.zhang = std::max(rep.zhang, res);
        }
        for (double a : {0.5, 2.0}) {
            const CurvatureTensor ra = r_at(a);
            const CurvatureTensor rma = r_at(-a);
            double acc = 0.0;
            for (std::size_t t = 0; t < s.data().size(); ++t) {
                const double d = ra.lowered.data()[t] - rma.lowered.data()[t] -
                                 a * (r.lowered.data()[t] - rbar.lowered.data()[t]);
                acc += d * d;
            }
            const double res = normalized(
                std::sqrt(acc),
                {frobenius_norm(ra.lowered), frobenius_norm(rma.lowered), nr, nrbar});
            rep.detail.emplace_back("skew[alpha=" + std::to_string(a) + "]", res);
            rep.zhang_skew = std::max(rep.zhang_skew, res);
        }
    }

    rep.pass = rep.max_residual() < tol;
    return rep;
}

// Covariant derivative of the cubic tensor: nc(i,j,k,l) = (D_i C)_jkl, plus
// the worst asymmetry under exchanging the derivative slot with the first
// tensor slot (the symmetry probed by the rigidity results).
struct CovariantCubic {
    Tensor4 entries;
    double asymmetry = 0.0;
    double norm = 0.0;
};

inline CovariantCubic covariant_derivative_C(const ChartField& chart, const Vec& x) {
    const int n = chart.dim();
    const Tensor3 hat = detail::hat_second_kind(chart, x);
    const Tensor3 c = chart.cubic_entries(x);
    const auto dc = detail::field_axis_derivatives(
        [&](const Vec& y) { return chart.cubic_entries(y).data(); }, x);

    CovariantCubic out{Tensor4(n), 0.0, 0.0};
    Tensor3 dci(n);
    for (int i = 0; i < n; ++i) {
        dci.data() = dc[i];
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l) {
                    double v = dci(j, k, l);
                    for (int m = 0; m < n; ++m)
                        v -= hat(m, i, j) * c(m, k, l) + hat(m, i, k) * c(j, m, l) +
                             hat(m, i, l) * c(j, k, m);
                    out.entries(i, j, k, l) = v;
                }
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    out.asymmetry = std::max(
                        out.asymmetry,
                        std::abs(out.entries(i, j, k, l) - out.entries(j, i, k, l)));
    out.norm = frobenius_norm(out.entries);
    return out;
}

// Trace field E^h = g^{ij} K^h_ij and its covariant derivative
// ne(i,h) = (D_i E)^h.
struct TraceField {
    Vec e;
    Mat nabla_e;
    double nabla_norm = 0.0;
};

inline TraceField trace_field_E(const ChartField& chart, const Vec& x) {
    const int n = chart.dim();
    auto e_field = [&](const Vec& y) {
        const Metric g = detail::metric_at(chart, y);
        const Tensor3 c = chart.cubic_entries(y);
        const Mat& gi = g.inverse();
        std::vector<double> e(n, 0.0);
        for (int h = 0; h < n; ++h) {
            double s = 0.0;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int m = 0; m < n; ++m) s += gi(i, j) * gi(h, m) * c(i, j, m);
            e[h] = s;
        }
        return e;
    };

    TraceField out;
    out.e = e_field(x);
    const auto de = detail::field_axis_derivatives(e_field, x);
    const Tensor3 hat = detail::hat_second_kind(chart, x);
    out.nabla_e = Mat(n, n);
    for (int i = 0; i < n; ++i)
        for (int h = 0; h < n; ++h) {
            double v = de[i][h];
            for (int m = 0; m < n; ++m) v += hat(h, i, m) * out.e[m];
            out.nabla_e(i, h) = v;
        }
    out.nabla_norm = frobenius_norm(out.nabla_e);
    return out;
}

}  // namespace statfrob
