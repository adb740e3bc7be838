#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <string>
#include <vector>

#include "statfrob/chart_json.hpp"
#include "statfrob/report_json.hpp"
#include "statfrob/tensor.hpp"

using namespace statfrob;

namespace {

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

// asserts that `fn` raises ConfigError and that the message names the field
template <typename Fn>
void expect_config(Fn&& fn, const std::string& needle) {
    try {
        fn();
        FAIL("expected ConfigError mentioning '" << needle << "'");
    } catch (const ConfigError& e) {
        if (std::string(e.what()).find(needle) == std::string::npos)
            FAIL("ConfigError message \"" << e.what() << "\" does not mention '" << needle << "'");
        SUCCEED();
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("chart descriptions parse for every kind") {
    {
        const ChartField c = chart_from_json(Json::parse(R"({
            "type": "hessian", "dim": 2, "domain": [[-1,1],[-1,1]],
            "potential": "x1^4/24 + x2^4/24 + 0.5*x1*x2"})"));
        CHECK(c.kind() == ChartKind::hessian);
        CHECK(c.dim() == 2);
        const auto [g, cc] = c.evaluate({1.0, 2.0});
        CHECK_THAT(g.entries()(0, 0), Catch::Matchers::WithinAbs(0.5, 1e-7));
        CHECK_THAT(g.entries()(0, 1), Catch::Matchers::WithinAbs(0.5, 1e-7));
        CHECK_THAT(g.entries()(1, 1), Catch::Matchers::WithinAbs(2.0, 1e-7));
        CHECK_THAT(cc.entries()(0, 0, 0), Catch::Matchers::WithinAbs(-0.5, 1e-7));
    }
    {
        const ChartField c = chart_from_json(Json::parse(R"({
            "type": "explicit", "dim": 2, "domain": [[0,1],[0,1]],
            "g": ["1 + x1^2", "0", "1"], "C": ["x2", "0", "0", "1"]})"));
        CHECK(c.kind() == ChartKind::explicit_fields);
        const Mat g = c.metric_entries({0.5, 0.25});
        CHECK(g(0, 0) == 1.25);
        const Tensor3 t = c.cubic_entries({0.5, 0.25});
        CHECK(t(0, 0, 0) == 0.25);
        CHECK(t(1, 1, 1) == 1.0);
    }
    {
        const ChartField c = chart_from_json(Json::parse(R"({
            "type": "isothermal2d", "domain": [[-1,1],[-1,1]],
            "conformal": "1", "f": ["1","0","2","0"]})"));
        CHECK(c.kind() == ChartKind::isothermal2d);
        CHECK(c.dim() == 2);
        const Tensor3 t = c.cubic_entries({0.3, 0.4});
        CHECK(t(0, 0, 0) == 1.0);
        CHECK(t(0, 1, 1) == 2.0);
    }
    {
        const ChartField c = chart_from_json(Json::parse(
            R"({"type": "bcn", "n": 2, "s": 0.25, "q": 1.0})"));
        CHECK(c.kind() == ChartKind::bcn);
        CHECK(c.dim() == 2);
        CHECK(c.bcn_params().r == -2.0);
        CHECK(c.bcn_params().margin == 1e-3);
        REQUIRE(c.domain().size() == 2);  // default box when none is given
        CHECK(c.domain()[0].first == 0.15);

        // "dim" works as an alias for "n", and both together must agree
        const ChartField alias = chart_from_json(Json::parse(
            R"({"type": "bcn", "dim": 2, "s": 0.25, "q": 1.0, "margin": 0.05})"));
        CHECK(alias.bcn_params().n == 2);
        CHECK(alias.bcn_params().margin == 0.05);
        expect_config(
            [] {
                chart_from_json(Json::parse(
                    R"({"type": "bcn", "n": 2, "dim": 3, "s": 0, "q": 1})"));
            },
            "'dim' and 'n' disagree");
    }
    {
        const ChartField c = chart_from_json(Json::parse(R"json({
            "type": "finite_family", "dim": 1, "domain": [[0.05, 0.95]],
            "log_probs": ["log(1 - x1)", "log(x1)"]})json"));
        CHECK(c.kind() == ChartKind::finite_family);
        const auto [g, cc] = c.evaluate({0.25});
        CHECK_THAT(g.entries()(0, 0), Catch::Matchers::WithinAbs(16.0 / 3.0, 1e-6));
    }
}

TEST_CASE("chart schema violations name the offending field") {
    expect_config([] { chart_from_json(Json::parse(R"({"dim": 1})")); }, "'type'");
    expect_config([] { chart_from_json(Json::parse(R"("hessian")")); }, "'type'");
    expect_config(
        [] {
            chart_from_json(Json::parse(
                R"({"type": "spherical", "dim": 1, "domain": [[0,1]]})"));
        },
        "explicit, hessian, isothermal2d, bcn, finite_family");
    expect_config(
        [] { chart_from_json(Json::parse(R"({"type": "hessian", "dim": 2})")); }, "'domain'");
    expect_config(
        [] {
            chart_from_json(Json::parse(
                R"({"type": "hessian", "dim": 2, "domain": [[0,1]], "potential": "x1"})"));
        },
        "'domain'");
    expect_config(
        [] {
            chart_from_json(Json::parse(
                R"({"type": "hessian", "dim": 1, "domain": [[0,1,2]], "potential": "x1"})"));
        },
        "'domain[0]'");
    expect_config(
        [] {
            chart_from_json(Json::parse(
                R"({"type": "hessian", "dim": 0, "domain": [], "potential": "1"})"));
        },
        "'dim'");
    expect_config(
        [] {
            chart_from_json(Json::parse(
                R"({"type": "hessian", "dim": 1, "domain": [[0,1]]})"));
        },
        "'potential'");
    // a broken expression surfaces as a ConfigError naming the field, so the
    // CLI maps it to the usage exit code rather than crashing
    expect_config(
        [] {
            chart_from_json(Json::parse(
                R"({"type": "hessian", "dim": 1, "domain": [[0,1]], "potential": "x1 +"})"));
        },
        "'potential'");
    expect_config(
        [] {
            chart_from_json(Json::parse(R"({"type": "explicit", "dim": 2,
                "domain": [[0,1],[0,1]], "g": ["1","0","1"], "C": ["0","0","0"]})"));
        },
        "'C'");
    expect_config(
        [] {
            chart_from_json(Json::parse(R"({"type": "explicit", "dim": 2,
                "domain": [[0,1],[0,1]], "g": ["1","0"], "C": ["0","0","0","0"]})"));
        },
        "'g'");
    expect_config(
        [] {
            chart_from_json(Json::parse(R"({"type": "isothermal2d", "dim": 3,
                "domain": [[0,1],[0,1]], "conformal": "1", "f": ["1","1","1","1"]})"));
        },
        "'dim'");
    expect_config(
        [] {
            chart_from_json(Json::parse(R"({"type": "isothermal2d",
                "domain": [[0,1],[0,1]], "conformal": "1", "f": ["1","1","1"]})"));
        },
        "'f'");
    expect_config(
        [] {
            chart_from_json(Json::parse(R"json({"type": "finite_family", "dim": 1,
                "domain": [[0,1]], "log_probs": "log(x1)"})json"));
        },
        "'log_probs'");
}

TEST_CASE("finite-difference overrides") {
    const ChartField c = chart_from_json(Json::parse(R"({
        "type": "hessian", "dim": 1, "domain": [[-1,1]], "potential": "x1^2",
        "fd": {"h_low": 1e-5, "levels": 3}})"));
    CHECK(c.fd().h_low == 1e-5);
    CHECK(c.fd().levels == 3);
    CHECK(c.fd().h_third == 1e-2);  // untouched keys keep their defaults

    expect_config(
        [] {
            chart_from_json(Json::parse(R"({"type": "hessian", "dim": 1,
                "domain": [[-1,1]], "potential": "x1^2", "fd": {"step": 1}})"));
        },
        "'fd.step'");
    expect_config(
        [] {
            chart_from_json(Json::parse(R"({"type": "hessian", "dim": 1,
                "domain": [[-1,1]], "potential": "x1^2", "fd": {"h_low": "tiny"}})"));
        },
        "'fd.h_low'");
    expect_config(
        [] {
            chart_from_json(Json::parse(R"({"type": "hessian", "dim": 1,
                "domain": [[-1,1]], "potential": "x1^2", "fd": 7})"));
        },
        "'fd'");
}

TEST_CASE("prepotential descriptions") {
    {
        const Prepotential p = prepotential_from_json(Json::parse(R"({
            "type": "prepotential", "dim": 2, "F": "x1^3/6 + x2^3/6", "A": ["1", "1"]})"));
        CHECK(p.kind() == PrepKind::generic);
        CHECK(p.dim() == 2);
        const WdvvReport rep = wdvv_matrix_residual(p, {0.5, 0.7});
        CHECK(rep.pass);
    }
    {
        const Prepotential p = prepotential_from_json(Json::parse(
            R"({"type": "bcn", "n": 2, "s": 0.0, "q": 1.0})"));
        CHECK(p.kind() == PrepKind::bcn);
        CHECK(p.bcn_params().r == 0.0);
    }
    {
        // the A list is optional: without it only the pair residuals that do
        // not need the unit metric stay reachable
        const Prepotential p = prepotential_from_json(Json::parse(
            R"({"type": "prepotential", "dim": 1, "F": "x1^3/6"})"));
        CHECK(p.unit_coeffs().empty());
    }
    expect_config(
        [] {
            prepotential_from_json(Json::parse(
                R"({"type": "prepotential", "dim": 2, "F": "x1^3", "A": ["1"]})"));
        },
        "'A'");
    expect_config(
        [] { prepotential_from_json(Json::parse(R"({"type": "prepotential", "dim": 1})")); },
        "'F'");
    expect_config(
        [] { prepotential_from_json(Json::parse(R"({"type": "hessian", "dim": 1})")); },
        "'type'");
}

TEST_CASE("point lists") {
    const std::vector<Vec> pts = points_from_json(Json::parse("[[1,2],[3,4]]"), 2);
    REQUIRE(pts.size() == 2);
    CHECK(pts[1][1] == 4.0);

    // dim = 0 accepts any consistent width
    CHECK(points_from_json(Json::parse("[[1,2,3]]"), 0).at(0).size() == 3);
    CHECK(points_from_json(Json::parse("[]"), 2).empty());

    expect_config([] { points_from_json(Json::parse(R"({"p": 1})"), 2); }, "array");
    expect_config([] { points_from_json(Json::parse("[[1,2],[3]]"), 2); }, "'points[1]'");
    expect_config([] { points_from_json(Json::parse("[[1,2],[3]]"), 0); }, "'points[1]'");
    expect_config([] { points_from_json(Json::parse(R"([[1,"a"]])"), 2); }, "'points[0][1]'");
    expect_config([] { points_from_json(Json::parse("[7]"), 1); }, "'points[0]'");
}

TEST_CASE("fixture files load and describe what their names say") {
    struct Expect {
        const char* file;
        ChartKind kind;
        int dim;
    };
    const std::vector<Expect> table = {
        {"hessian_basic.json", ChartKind::hessian, 2},
        {"coupled_cubic.json", ChartKind::hessian, 2},
        {"diag_cubic.json", ChartKind::hessian, 3},
        {"logit_partition.json", ChartKind::hessian, 2},
        {"isothermal_flat.json", ChartKind::isothermal2d, 2},
        {"isothermal_unit.json", ChartKind::isothermal2d, 2},
        {"isothermal_curved.json", ChartKind::isothermal2d, 2},
        {"bernoulli.json", ChartKind::finite_family, 1},
        {"categorical_logit.json", ChartKind::finite_family, 2},
        {"nonspd_region.json", ChartKind::explicit_fields, 2},
        {"bcn2.json", ChartKind::bcn, 2},
        {"bcn2s.json", ChartKind::bcn, 2},
        {"bcn3.json", ChartKind::bcn, 3},
    };
    for (const Expect& e : table) {
        INFO(e.file);
        const ChartField c = chart_from_json(load_json_file(fixture(e.file)));
        CHECK(c.kind() == e.kind);
        CHECK(c.dim() == e.dim);
        if (c.kind() != ChartKind::bcn) {
            // the domain centre is a valid evaluation point for every
            // non-family-specific fixture
            Vec x;
            for (const auto& [lo, hi] : c.domain()) x.push_back(0.5 * (lo + hi));
            if (e.file == std::string("nonspd_region.json")) x = {1.0, 0.5};
            CHECK(c.evaluate(x).first.entries().rows() == c.dim());
        }
    }

    // the deliberately-broken fixtures break in the documented ways
    expect_config([] { load_json_file(fixture("malformed.json")); }, "invalid JSON");
    expect_config([] { load_json_file(fixture("no_such_file.json")); }, "cannot open");
    CHECK_THROWS_AS(chart_from_json(load_json_file(fixture("unnormalized_family.json")))
                        .evaluate({0.3}),
                    NotNormalized);
    CHECK_THROWS_AS(chart_from_json(load_json_file(fixture("nonspd_region.json")))
                        .evaluate({-1.0, 0.0}),
                    NotSpdAtPoint);

    const std::vector<Vec> pts = points_from_json(load_json_file(fixture("points_bcn2.json")), 2);
    CHECK(pts.size() == 3);
    CHECK(points_from_json(load_json_file(fixture("points_theta.json")), 1).at(0).at(0) == 0.25);

    // prepotential fixture (extra keys like "domain" are tolerated)
    const Prepotential p =
        prepotential_from_json(load_json_file(fixture("prepotential_cubic.json")));
    CHECK(p.dim() == 2);
}

TEST_CASE("report serialization is complete and deterministic") {
    const Prepotential generic = prepotential_from_json(Json::parse(R"({
        "type": "prepotential", "dim": 2, "F": "x1^3/6 + x2^3/6", "A": ["1", "1"]})"));
    const Json wj = to_json(wdvv_matrix_residual(generic, {0.5, 0.7}));
    CHECK_FALSE(wj.contains("h"));  // family-only diagnostics stay absent
    CHECK(wj["pass"].get<bool>());
    CHECK(wj["pairs"].size() == 1);
    CHECK(wj["pairs"][0]["i"] == 1);
    CHECK(wj["pairs"][0]["j"] == 2);
    CHECK(wj["B"].size() == 2);

    const AafReport ar = verify_aaf(2, 0.25, 1.0, {{0.3, 0.7}, {0.9, 0.4}});
    const Json aj = to_json(ar);
    CHECK(aj["pass"].get<bool>());
    CHECK(aj["params"]["r"] == -2.0);
    CHECK(aj["points"].size() == 2);
    CHECK(aj["points"][0].contains("h"));
    CHECK(aj["points"][0]["b_offdiag_max"].get<double>() < 1e-12);

    // identical runs serialize to byte-identical text
    const std::string once = aj.dump(2);
    const std::string again = to_json(verify_aaf(2, 0.25, 1.0, {{0.3, 0.7}, {0.9, 0.4}})).dump(2);
    CHECK(once == again);
}

TEST_CASE("frame serialization") {
    const KOperator k = build_constant_curvature_K({2.0, 3.0}, 0.0);
    const Metric g(Mat::identity(2));
    const SpectralData sd = simultaneous_diagonalize(k, g);
    const Json sj = to_json(sd);
    CHECK(sj["dim"] == 2);
    CHECK_THAT(sj["lambda"][0].get<double>(), Catch::Matchers::WithinAbs(3.0, 1e-12));
    CHECK_THAT(sj["lambda"][1].get<double>(), Catch::Matchers::WithinAbs(2.0, 1e-12));
    CHECK(sj["basis"].size() == 2);     // one column vector per direction
    CHECK(sj["basis"][0].size() == 2);  // each of length dim
    CHECK(sj.contains("mu"));
    CHECK(sj.contains("A"));

    const IdempotentFrame frame = canonical_idempotents(k, g);
    const Json fj = to_json(frame);
    CHECK(fj["u"].size() == 2);
    // norms holds g(u_i, u_i) = 1/λ_i² for a diagonal structure
    CHECK_THAT(fj["norms"][0].get<double>(), Catch::Matchers::WithinAbs(1.0 / 9.0, 1e-12));
    CHECK_THAT(fj["norms"][1].get<double>(), Catch::Matchers::WithinAbs(0.25, 1e-12));
}

TEST_CASE("text rendering walks the whole report") {
    const Json aj = to_json(verify_aaf(2, 0.0, 1.0, {{0.3, 0.7}}));
    const std::string text = render_text(aj);
    CHECK(text.find("worst_pair:") != std::string::npos);
    CHECK(text.find("pass: true") != std::string::npos);
    CHECK(text.find("params:") != std::string::npos);
    CHECK(text.find("- [0]") != std::string::npos);       // indexed nested entries
    CHECK(text.find("point: [0.3,0.7]") != std::string::npos);  // scalar arrays inline

    // scalars and arrays render on their own too
    CHECK(render_text(Json(3.5)) == "3.5\n");
    CHECK(render_text(Json::parse("[1,2]")) == "- 1\n- 2\n");
}

TEST_CASE("atomic report writing") {
    const std::string path = "/tmp/statfrob_json_test_report.json";
    const Json aj = to_json(verify_aaf(2, 0.0, 1.0, {{0.3, 0.7}}));
    write_file_atomic(path, aj.dump(2) + "\n");
    CHECK(slurp(path) == aj.dump(2) + "\n");

    // overwriting an existing file replaces it completely
    write_file_atomic(path, "{}\n");
    CHECK(slurp(path) == "{}\n");
    std::remove(path.c_str());

    expect_config([] { write_file_atomic("/no/such/dir/report.json", "x"); }, "cannot open");
}
