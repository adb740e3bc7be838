#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "statfrob/chart.hpp"
#include "statfrob/errors.hpp"
#include "statfrob/expr.hpp"
#include "statfrob/linalg.hpp"

using namespace statfrob;

namespace {

ScalarExpr ex(const std::string& text, int dim) { return ScalarExpr::parse(text, dim); }

std::vector<ScalarExpr> exprs(std::initializer_list<const char*> texts, int dim) {
    std::vector<ScalarExpr> out;
    for (const char* t : texts) out.push_back(ScalarExpr::parse(t, dim));
    return out;
}

}  // namespace

TEST_CASE("quadratic potential gives the flat structure") {
    const ChartField chart =
        ChartField::make_hessian(2, {{-1.0, 1.0}, {-1.0, 1.0}}, ex("x1^2/2 + x2^2/2", 2));
    const Vec x{0.3, -0.4};
    const Mat g = chart.metric_entries(x);
    CHECK_THAT(g(0, 0), Catch::Matchers::WithinAbs(1.0, 1e-8));
    CHECK_THAT(g(1, 1), Catch::Matchers::WithinAbs(1.0, 1e-8));
    CHECK_THAT(g(0, 1), Catch::Matchers::WithinAbs(0.0, 1e-8));
    const Tensor3 c = chart.cubic_entries(x);
    CHECK_THAT(max_abs(c), Catch::Matchers::WithinAbs(0.0, 1e-7));
}

TEST_CASE("quartic potential in one dimension") {
    const ChartField chart = ChartField::make_hessian(1, {{0.5, 1.5}}, ex("x1^4", 1));
    // phi'' = 12 x^2, phi''' = 24 x; C = -phi'''/2
    const Vec x{1.0};
    CHECK_THAT(chart.metric_entries(x)(0, 0), Catch::Matchers::WithinAbs(12.0, 1e-6));
    CHECK_THAT(chart.cubic_entries(x)(0, 0, 0), Catch::Matchers::WithinAbs(-12.0, 1e-5));
    CHECK_THAT(chart.dmetric(x)(0, 0, 0), Catch::Matchers::WithinAbs(24.0, 1e-5));
}

TEST_CASE("hessian chart matches hand derivatives of a mixed potential") {
    const ChartField chart = ChartField::make_hessian(
        2, {{-0.8, 0.8}, {-0.8, 0.8}}, ex("x1^2/2 + x2^2/2 + 0.1*x1^2*x2", 2));
    const Vec x{0.4, -0.2};
    const Mat g = chart.metric_entries(x);
    CHECK_THAT(g(0, 0), Catch::Matchers::WithinAbs(1.0 + 0.2 * x[1], 1e-7));
    CHECK_THAT(g(0, 1), Catch::Matchers::WithinAbs(0.2 * x[0], 1e-7));
    CHECK_THAT(g(1, 1), Catch::Matchers::WithinAbs(1.0, 1e-7));
    const Tensor3 c = chart.cubic_entries(x);
    CHECK_THAT(c(0, 0, 1), Catch::Matchers::WithinAbs(-0.1, 1e-6));
    CHECK_THAT(c(0, 0, 0), Catch::Matchers::WithinAbs(0.0, 1e-6));
    CHECK_THAT(c(1, 1, 1), Catch::Matchers::WithinAbs(0.0, 1e-6));

    // dmetric is the totally symmetric third-derivative array: d(i,j,k) = phi_ijk
    const Tensor3 d = chart.dmetric(x);
    CHECK_THAT(d(0, 0, 1), Catch::Matchers::WithinAbs(0.2, 1e-6));
    CHECK(d(0, 0, 1) == d(1, 0, 0));
    CHECK(d(0, 0, 1) == d(0, 1, 0));
}

TEST_CASE("isothermal chart stores the four cubic functions directly") {
    const ChartField chart = ChartField::make_isothermal2d(
        {{-1.0, 1.0}, {-1.0, 1.0}}, ex("1", 2), exprs({"1", "0", "2", "0"}, 2));
    const Vec x{0.1, 0.2};
    const Mat g = chart.metric_entries(x);
    CHECK(g(0, 0) == 1.0);
    CHECK(g(1, 1) == 1.0);
    CHECK(g(0, 1) == 0.0);
    const Tensor3 c = chart.cubic_entries(x);
    CHECK(c(0, 0, 0) == 1.0);
    CHECK(c(0, 0, 1) == 0.0);
    CHECK(c(0, 1, 1) == 2.0);
    CHECK(c(1, 1, 1) == 0.0);
    CHECK(c(1, 0, 1) == 2.0);  // symmetric copies are exact
}

TEST_CASE("isothermal conformal factor scales the metric") {
    const ChartField chart = ChartField::make_isothermal2d(
        {{-0.5, 0.5}, {-0.5, 0.5}}, ex("exp(x1 + 0.5*x2)", 2),
        exprs({"1", "0.3", "-0.2", "0.8"}, 2));
    const Vec x{0.2, -0.1};
    const double phi = std::exp(x[0] + 0.5 * x[1]);
    const Mat g = chart.metric_entries(x);
    CHECK_THAT(g(0, 0), Catch::Matchers::WithinAbs(phi, 1e-12));
    CHECK_THAT(g(1, 1), Catch::Matchers::WithinAbs(phi, 1e-12));

    // d g_jj / d x_i = d phi / d x_i
    const Tensor3 d = chart.dmetric(x);
    CHECK_THAT(d(0, 0, 0), Catch::Matchers::WithinAbs(phi, 1e-7));
    CHECK_THAT(d(1, 0, 0), Catch::Matchers::WithinAbs(0.5 * phi, 1e-7));
    CHECK_THAT(d(0, 1, 1), Catch::Matchers::WithinAbs(phi, 1e-7));
    CHECK_THAT(d(0, 0, 1), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("explicit chart evaluates entry expressions") {
    // g = [[1 + x1^2, x1*x2], [x1*x2, 2]], C identically zero
    const ChartField chart = ChartField::make_explicit(
        2, {{-0.5, 0.5}, {-0.5, 0.5}}, exprs({"1 + x1^2", "x1*x2", "2"}, 2),
        exprs({"0", "0", "0", "0"}, 2));
    const Vec x{0.3, 0.4};
    const Mat g = chart.metric_entries(x);
    CHECK_THAT(g(0, 0), Catch::Matchers::WithinAbs(1.09, 1e-12));
    CHECK_THAT(g(0, 1), Catch::Matchers::WithinAbs(0.12, 1e-12));
    CHECK_THAT(g(1, 1), Catch::Matchers::WithinAbs(2.0, 1e-12));

    // dmetric: d g_00 / d x1 = 2 x1, d g_01 / d x1 = x2, d g_01 / d x2 = x1
    const Tensor3 d = chart.dmetric(x);
    CHECK_THAT(d(0, 0, 0), Catch::Matchers::WithinAbs(0.6, 1e-8));
    CHECK_THAT(d(0, 0, 1), Catch::Matchers::WithinAbs(0.4, 1e-8));
    CHECK_THAT(d(1, 0, 1), Catch::Matchers::WithinAbs(0.3, 1e-8));
    CHECK_THAT(d(0, 1, 1), Catch::Matchers::WithinAbs(0.0, 1e-8));
}

TEST_CASE("non-positive metric points are reported with the location") {
    const ChartField chart = ChartField::make_explicit(
        2, {{-2.0, 2.0}, {-2.0, 2.0}}, exprs({"x1", "0", "1"}, 2),
        exprs({"0", "0", "0", "0"}, 2));
    CHECK_NOTHROW(chart.evaluate(Vec{1.0, 0.0}));
    try {
        chart.evaluate(Vec{-1.0, 0.0});
        FAIL("expected NotSpdAtPoint");
    } catch (const NotSpdAtPoint& e) {
        CHECK(std::string(e.what()).find("(-1, 0)") != std::string::npos);
    }
}

TEST_CASE("fisher information of the bernoulli family") {
    const ChartField chart = ChartField::make_finite_family(
        1, {{0.05, 0.95}}, exprs({"log(1 - x1)", "log(x1)"}, 1));

    auto [g, t] = fisher_finite_family(chart, Vec{0.25});
    CHECK_THAT(g(0, 0), Catch::Matchers::WithinAbs(16.0 / 3.0, 1e-6));
    // E[(d log p)^3] = 1/theta^2 - 1/(1-theta)^2 = 128/9 at theta = 1/4
    CHECK_THAT(t(0, 0, 0), Catch::Matchers::WithinAbs(128.0 / 9.0, 1e-5));

    // closed form at many parameter values
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const double theta = rng.uniform(0.08, 0.92);
        auto [gm, tm] = fisher_finite_family(chart, Vec{theta});
        const double expected = 1.0 / (theta * (1.0 - theta));
        CHECK_THAT(gm(0, 0), Catch::Matchers::WithinAbs(expected, 1e-5 * expected));
    }
}

TEST_CASE("fisher metric of a logit family equals the hessian of its partition") {
    // Three outcomes with logits (0, x1, x2): the Fisher metric is the
    // Hessian of log(1 + e^{x1} + e^{x2}).
    const char* lse = "log(1 + exp(x1) + exp(x2))";
    const ChartField family = ChartField::make_finite_family(
        2, {{-1.0, 1.0}, {-1.0, 1.0}},
        exprs({"-log(1 + exp(x1) + exp(x2))", "x1 - log(1 + exp(x1) + exp(x2))",
               "x2 - log(1 + exp(x1) + exp(x2))"},
              2));
    const ChartField potential =
        ChartField::make_hessian(2, {{-1.0, 1.0}, {-1.0, 1.0}}, ex(lse, 2));

    Rng rng(78);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec x = rng.point_in_box(family.domain());
        const Mat gf = family.metric_entries(x);
        const Mat gh = potential.metric_entries(x);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                CHECK_THAT(gf(i, j), Catch::Matchers::WithinAbs(gh(i, j), 1e-5));
        // and the skewness tensors agree up to the C = -T/2 convention shared
        // by both chart kinds
        const Tensor3 cf = family.cubic_entries(x);
        const Tensor3 ch = potential.cubic_entries(x);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k)
                    CHECK_THAT(cf(i, j, k), Catch::Matchers::WithinAbs(ch(i, j, k), 1e-4));
    }
}

TEST_CASE("family validation failures") {
    // probabilities that do not sum to one
    const ChartField unnorm = ChartField::make_finite_family(
        1, {{0.1, 0.9}}, exprs({"log(x1)", "log(x1)"}, 1));
    CHECK_THROWS_AS(unnorm.metric_entries(Vec{0.3}), NotNormalized);

    // overflow in exp(log p) surfaces as a non-positive/non-finite probability
    const ChartField blowup = ChartField::make_finite_family(
        1, {{0.001, 0.01}}, exprs({"1/x1", "log(1 - x1)"}, 1));
    CHECK_THROWS_AS(blowup.metric_entries(Vec{0.001}), NonPositiveProbability);

    // a family whose Fisher matrix is singular: both outcomes have the same
    // score, so g = E[dl^2] vanishes in no direction but the family below
    // keeps theta out of the likelihood entirely
    const ChartField constant = ChartField::make_finite_family(
        1, {{0.1, 0.9}}, exprs({"log(0.5) + 0*x1", "log(0.5) + 0*x1"}, 1));
    CHECK_THROWS_AS(fisher_finite_family(constant, Vec{0.4}), SingularFisher);

    CHECK_THROWS_AS(ChartField::make_finite_family(1, {{0.1, 0.9}}, exprs({"log(x1)"}, 1)),
                    ConfigError);
}

TEST_CASE("construction validates shapes and domains") {
    CHECK_THROWS_AS(
        ChartField::make_explicit(2, {{0.0, 1.0}, {0.0, 1.0}}, exprs({"1", "0"}, 2),
                                  exprs({"0", "0", "0", "0"}, 2)),
        ConfigError);  // needs 3 metric entries
    CHECK_THROWS_AS(
        ChartField::make_explicit(2, {{0.0, 1.0}, {0.0, 1.0}}, exprs({"1", "0", "1"}, 2),
                                  exprs({"0", "0", "0"}, 2)),
        ConfigError);  // needs 4 cubic entries
    CHECK_THROWS_AS(ChartField::make_isothermal2d({{0.0, 1.0}, {0.0, 1.0}}, ex("1", 2),
                                                  exprs({"1", "0", "2"}, 2)),
                    ConfigError);
    CHECK_THROWS_AS(ChartField::make_hessian(2, {{0.0, 1.0}}, ex("x1^2", 2)), ConfigError);
    CHECK_THROWS_AS(ChartField::make_hessian(1, {{1.0, 0.0}}, ex("x1^2", 1)), ConfigError);
    CHECK_THROWS_AS(ChartField::make_hessian(0, {}, ex("1", 1)), ConfigError);

    const ChartField ok = ChartField::make_hessian(1, {{0.0, 1.0}}, ex("x1^2", 1));
    CHECK_THROWS_AS(ok.metric_entries(Vec{0.5, 0.5}), DimensionMismatch);
}

TEST_CASE("sampling respects the domain box") {
    const ChartField chart = ChartField::make_hessian(2, {{0.2, 0.4}, {-1.0, -0.5}},
                                                      ex("x1^2 + x2^2", 2));
    Rng rng(91);
    for (int trial = 0; trial < 50; ++trial) {
        const Vec x = chart.sample_point(rng);
        REQUIRE(x.size() == 2);
        CHECK(x[0] >= 0.2);
        CHECK(x[0] <= 0.4);
        CHECK(x[1] >= -1.0);
        CHECK(x[1] <= -0.5);
    }
}

TEST_CASE("closed-form family sampling avoids pole margins") {
    const BcnParams p = BcnParams::make(3, 0.5, -1.0, 0.05);
    const ChartField chart = ChartField::make_bcn(p, {{-0.4, 0.4}, {-0.4, 0.4}, {-0.4, 0.4}});
    Rng rng(92);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec x = chart.sample_point(rng);
        for (int i = 0; i < 3; ++i) {
            CHECK(std::abs(x[i]) >= p.margin);
            for (int j = i + 1; j < 3; ++j) {
                CHECK(std::abs(x[i] - x[j]) >= p.margin);
                CHECK(std::abs(x[i] + x[j]) >= p.margin);
            }
        }
        CHECK_FALSE(bcn_genericity_violation(p, x).has_value());
    }
}

TEST_CASE("metric derivative agrees with differentiating the metric entries") {
    const ChartField chart = ChartField::make_hessian(
        2, {{0.2, 1.0}, {0.2, 1.0}}, ex("x1^3/6 + x2^3/6 + 0.5*x1^2*x2", 2));
    const Vec x{0.6, 0.8};
    const Tensor3 d = chart.dmetric(x);
    for (int j = 0; j < 2; ++j)
        for (int k = j; k < 2; ++k)
            for (int i = 0; i < 2; ++i) {
                PointFn entry = [&](const Vec& p) { return chart.metric_entries(p)(j, k); };
                const double fd = derive_fd_fn(entry, x, {i}, chart.fd());
                CHECK_THAT(d(i, j, k), Catch::Matchers::WithinAbs(fd, 1e-5));
            }
    // closed forms for this potential: g = [[x1 + x2, x1], [x1, x2]] + const
    CHECK_THAT(d(0, 0, 0), Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK_THAT(d(1, 0, 0), Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK_THAT(d(0, 0, 1), Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK_THAT(d(1, 1, 1), Catch::Matchers::WithinAbs(1.0, 1e-6));
    CHECK_THAT(d(0, 1, 1), Catch::Matchers::WithinAbs(0.0, 1e-6));
}
