#pragma once

// Chart families over a box domain: explicit expression fields, Hessian
// potentials, 2D isothermal structures, the BC_n closed-form family, and
// finite probability families (Fisher geometry). A chart can evaluate its
// metric and cubic tensor at a point, report metric derivatives (with
// closed-form fast paths where the kind permits), and sample domain points.
//
// Tensors assembled from finite differences are filled one sorted
// multi-index at a time and copied to all permutations, so they are exactly
// symmetric no matter what rounding noise the stencils carry.

#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "statfrob/bcn.hpp"
#include "statfrob/errors.hpp"
#include "statfrob/expr.hpp"
#include "statfrob/fd.hpp"
#include "statfrob/linalg.hpp"
#include "statfrob/tensor.hpp"

namespace statfrob {

enum class ChartKind { explicit_fields, hessian, isothermal2d, bcn, finite_family };

inline const char* chart_kind_name(ChartKind k) {
    switch (k) {
        case ChartKind::explicit_fields: return "explicit";
        case ChartKind::hessian: return "hessian";
        case ChartKind::isothermal2d: return "isothermal2d";
        case ChartKind::bcn: return "bcn";
        case ChartKind::finite_family: return "finite_family";
    }
    return "?";
}

// -- packed storage for symmetric entry lists ------------------------------

inline int triangle_count(int n) { return n * (n + 1) / 2; }
inline int triangle_index(int n, int i, int j) {  // requires i <= j
    return i * n - i * (i - 1) / 2 + (j - i);
}
inline int tetra_count(int n) { return n * (n + 1) * (n + 2) / 6; }
inline int tetra_index(int n, int i, int j, int k) {  // requires i <= j <= k
    int off = 0;
    for (int t = 0; t < i; ++t) off += triangle_count(n - t);
    return off + triangle_index(n - i, j - i, k - i);
}

inline std::string format_point(const Vec& x) {
    std::ostringstream os;
    os << std::setprecision(12) << "(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ")";
    return os.str();
}

using DomainBox = std::vector<std::pair<double, double>>;

class ChartField {
  public:
    // explicit fields: g as upper-triangular expressions (row-major, size
    // n(n+1)/2), C as sorted-index expressions (size n(n+1)(n+2)/6)
    static ChartField make_explicit(int dim, DomainBox domain, std::vector<ScalarExpr> g_upper,
                                    std::vector<ScalarExpr> c_upper, FdPolicy fd = {}) {
        ChartField c(ChartKind::explicit_fields, dim, std::move(domain), fd);
        if (static_cast<int>(g_upper.size()) != triangle_count(dim))
            throw ConfigError("explicit chart needs " + std::to_string(triangle_count(dim)) +
                              " metric entries (upper triangle), got " +
                              std::to_string(g_upper.size()));
        if (static_cast<int>(c_upper.size()) != tetra_count(dim))
            throw ConfigError("explicit chart needs " + std::to_string(tetra_count(dim)) +
                              " cubic entries (sorted indices), got " +
                              std::to_string(c_upper.size()));
        c.g_upper_ = std::move(g_upper);
        c.c_upper_ = std::move(c_upper);
        return c;
    }

    static ChartField make_hessian(int dim, DomainBox domain, ScalarExpr potential,
                                   FdPolicy fd = {}) {
        ChartField c(ChartKind::hessian, dim, std::move(domain), fd);
        c.potential_ = std::move(potential);
        return c;
    }

    static ChartField make_isothermal2d(DomainBox domain, ScalarExpr conformal,
                                        std::vector<ScalarExpr> f, FdPolicy fd = {}) {
        ChartField c(ChartKind::isothermal2d, 2, std::move(domain), fd);
        if (f.size() != 4)
            throw ConfigError("isothermal2d chart needs exactly f1..f4, got " +
                              std::to_string(f.size()) + " entries");
        c.conformal_ = std::move(conformal);
        c.f_ = std::move(f);
        return c;
    }

    static ChartField make_bcn(BcnParams params, DomainBox domain = {}, FdPolicy fd = {}) {
        if (domain.empty()) domain.assign(params.n, {0.15, 1.5});
        ChartField c(ChartKind::bcn, params.n, std::move(domain), fd);
        c.bcn_ = params;
        return c;
    }

    static ChartField make_finite_family(int dim, DomainBox domain,
                                         std::vector<ScalarExpr> log_probs, FdPolicy fd = {}) {
        ChartField c(ChartKind::finite_family, dim, std::move(domain), fd);
        if (log_probs.size() < 2)
            throw ConfigError("finite family needs at least two outcomes");
        c.logp_ = std::move(log_probs);
        return c;
    }

    ChartKind kind() const { return kind_; }
    int dim() const { return dim_; }
    const DomainBox& domain() const { return domain_; }
    const FdPolicy& fd() const { return fd_; }
    const BcnParams& bcn_params() const { return bcn_; }
    const ScalarExpr& potential() const { return potential_; }
    const ScalarExpr& conformal() const { return conformal_; }
    const std::vector<ScalarExpr>& isothermal_f() const { return f_; }
    const std::vector<ScalarExpr>& log_probs() const { return logp_; }

    // Raw metric entries at x (symmetric, not yet SPD-checked).
    Mat metric_entries(const Vec& x) const {
        check_point(x);
        const int n = dim_;
        Mat g(n, n);
        switch (kind_) {
            case ChartKind::explicit_fields:
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        g(i, j) = g(j, i) = g_upper_[triangle_index(n, i, j)].eval(x);
                break;
            case ChartKind::hessian:
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        g(i, j) = g(j, i) = derive_fd(potential_, x, {i, j}, fd_);
                break;
            case ChartKind::isothermal2d: {
                const double phi = conformal_.eval(x);
                g(0, 0) = g(1, 1) = phi;
                break;
            }
            case ChartKind::bcn:
                g = bcn_hessian(bcn_, x);
                break;
            case ChartKind::finite_family: {
                auto [sc, p] = scores(x);
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j) {
                        double s = 0.0;
                        for (std::size_t o = 0; o < p.size(); ++o)
                            s += sc[o][i] * sc[o][j] * p[o];
                        g(i, j) = g(j, i) = s;
                    }
                break;
            }
        }
        return g;
    }

    // Exactly symmetric cubic entries at x (the structure's C tensor).
    Tensor3 cubic_entries(const Vec& x) const {
        check_point(x);
        const int n = dim_;
        Tensor3 c(n);
        auto fill = [&](int i, int j, int k, double v) {
            c(i, j, k) = c(i, k, j) = c(j, i, k) = v;
            c(j, k, i) = c(k, i, j) = c(k, j, i) = v;
        };
        switch (kind_) {
            case ChartKind::explicit_fields:
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        for (int k = j; k < n; ++k)
                            fill(i, j, k, c_upper_[tetra_index(n, i, j, k)].eval(x));
                break;
            case ChartKind::hessian:
                // T = third derivatives of the potential; C = -T/2
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        for (int k = j; k < n; ++k)
                            fill(i, j, k, -0.5 * derive_fd(potential_, x, {i, j, k}, fd_));
                break;
            case ChartKind::isothermal2d:
                fill(0, 0, 0, f_[0].eval(x));
                fill(0, 0, 1, f_[1].eval(x));
                fill(0, 1, 1, f_[2].eval(x));
                fill(1, 1, 1, f_[3].eval(x));
                break;
            case ChartKind::bcn: {
                const Tensor3 f3 = bcn_third_derivatives(bcn_, x);
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        for (int k = j; k < n; ++k) fill(i, j, k, -0.5 * f3(i, j, k));
                break;
            }
            case ChartKind::finite_family: {
                auto [sc, p] = scores(x);
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        for (int k = j; k < n; ++k) {
                            double s = 0.0;
                            for (std::size_t o = 0; o < p.size(); ++o)
                                s += sc[o][i] * sc[o][j] * sc[o][k] * p[o];
                            fill(i, j, k, -0.5 * s);  // C = -T/2
                        }
                break;
            }
        }
        return c;
    }

    // SPD-checked metric and symmetric cubic tensor at x.
    std::pair<Metric, CubicTensor> evaluate(const Vec& x) const {
        Mat g = metric_entries(x);
        try {
            return {Metric(std::move(g)), CubicTensor(cubic_entries(x))};
        } catch (const NotSpd& e) {
            throw NotSpdAtPoint(std::string(e.what()) + " at point " + format_point(x));
        }
    }

    // d(i,j,k) = d g_jk / d x_i, using closed forms where the kind allows.
    Tensor3 dmetric(const Vec& x) const {
        check_point(x);
        const int n = dim_;
        Tensor3 d(n);
        switch (kind_) {
            case ChartKind::explicit_fields:
                for (int j = 0; j < n; ++j)
                    for (int k = j; k < n; ++k) {
                        const ScalarExpr& e = g_upper_[triangle_index(n, j, k)];
                        for (int i = 0; i < n; ++i)
                            d(i, j, k) = d(i, k, j) = derive_fd(e, x, {i}, fd_);
                    }
                break;
            case ChartKind::hessian:
                // dg_jk/dx_i is the symmetric third derivative of the potential
                for (int i = 0; i < n; ++i)
                    for (int j = i; j < n; ++j)
                        for (int k = j; k < n; ++k) {
                            const double v = derive_fd(potential_, x, {i, j, k}, fd_);
                            d(i, j, k) = d(i, k, j) = d(j, i, k) = v;
                            d(j, k, i) = d(k, i, j) = d(k, j, i) = v;
                        }
                break;
            case ChartKind::isothermal2d:
                for (int i = 0; i < n; ++i) {
                    const double phi_i = derive_fd(conformal_, x, {i}, fd_);
                    for (int j = 0; j < n; ++j) d(i, j, j) = phi_i;
                }
                break;
            case ChartKind::bcn: {
                const Tensor3 f3 = bcn_third_derivatives(bcn_, x);
                d = f3;  // dg_jk/dx_i = F_ijk, already totally symmetric
                break;
            }
            case ChartKind::finite_family:
                for (int j = 0; j < n; ++j)
                    for (int k = j; k < n; ++k) {
                        PointFn entry = [this, j, k](const Vec& p) {
                            return metric_entries(p)(j, k);
                        };
                        for (int i = 0; i < n; ++i)
                            d(i, j, k) = d(i, k, j) = derive_fd_fn(entry, x, {i}, fd_);
                    }
                break;
        }
        return d;
    }

    Vec sample_point(Rng& rng, int max_attempts = 1000) const {
        for (int a = 0; a < max_attempts; ++a) {
            Vec x = rng.point_in_box(domain_);
            if (kind_ == ChartKind::bcn && bcn_genericity_violation(bcn_, x)) continue;
            return x;
        }
        throw Error("could not sample a pole-free point from the chart domain");
    }

  private:
    ChartField(ChartKind kind, int dim, DomainBox domain, FdPolicy fd)
        : kind_(kind), dim_(dim), domain_(std::move(domain)), fd_(fd) {
        if (dim_ < 1 || dim_ > 32)
            throw ConfigError("chart dimension must be in 1..32, got " + std::to_string(dim_));
        if (static_cast<int>(domain_.size()) != dim_)
            throw ConfigError("domain box needs one [lo,hi] interval per dimension");
        for (const auto& [lo, hi] : domain_)
            if (!(lo < hi)) throw ConfigError("domain intervals must satisfy lo < hi");
        fd_.validate();
    }

    void check_point(const Vec& x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw DimensionMismatch("point dimension " + std::to_string(x.size()) +
                                    " does not match chart dimension " + std::to_string(dim_));
    }

    // Per-outcome probabilities and score vectors for the finite family.
    // Verifies positivity and normalization on every call.
    std::pair<std::vector<Vec>, Vec> scores(const Vec& theta) const {
        const int n = dim_;
        const std::size_t m = logp_.size();
        Vec p(m);
        double total = 0.0;
        for (std::size_t o = 0; o < m; ++o) {
            p[o] = std::exp(logp_[o].eval(theta));
            if (!std::isfinite(p[o]) || p[o] <= 0.0)
                throw NonPositiveProbability("outcome " + std::to_string(o) +
                                             " has non-positive probability at " +
                                             format_point(theta));
            total += p[o];
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw NotNormalized("probabilities sum to " + std::to_string(total) + " at " +
                                format_point(theta));
        std::vector<Vec> sc(m, Vec(n));
        for (std::size_t o = 0; o < m; ++o)
            for (int i = 0; i < n; ++i) sc[o][i] = derive_fd(logp_[o], theta, {i}, fd_);
        return {std::move(sc), std::move(p)};
    }

    ChartKind kind_;
    int dim_;
    DomainBox domain_;
    FdPolicy fd_;

    std::vector<ScalarExpr> g_upper_;
    std::vector<ScalarExpr> c_upper_;
    ScalarExpr potential_;
    ScalarExpr conformal_;
    std::vector<ScalarExpr> f_;
    BcnParams bcn_;
    std::vector<ScalarExpr> logp_;
};

// Fisher information geometry of a finite probability family: the metric
// g_ij = E[dl_i dl_j] and the skewness tensor T_ijk = E[dl_i dl_j dl_k],
// both as finite sums over the sample space.
inline std::pair<Metric, CubicTensor> fisher_finite_family(const ChartField& chart,
                                                           const Vec& theta) {
    if (chart.kind() != ChartKind::finite_family)
        throw ConfigError("fisher_finite_family requires a finite_family chart");
    Mat g = chart.metric_entries(theta);
    Tensor3 t = chart.cubic_entries(theta);
    // cubic_entries stores C = -T/2; undo to report T itself
    for (double& v : t.data()) v *= -2.0;
    try {
        return {Metric(std::move(g)), CubicTensor(t)};
    } catch (const NotSpd& e) {
        throw SingularFisher(std::string("Fisher matrix is singular at ") + format_point(theta) +
                             ": " + e.what());
    }
}

}  // namespace statfrob
