#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

// End-to-end runs of the installed binary, covering the exit-code contract:
// 0 checks passed, 1 checks failed, 2 configuration error, 3 evaluation
// error — plus byte-level determinism of the JSON reports.

namespace {

using Json = nlohmann::json;

struct RunResult {
    int code = -1;
    std::string out;  // stdout + stderr interleaved
};

std::string fixture(const std::string& name) { return std::string(FIXTURE_DIR) + "/" + name; }

RunResult run(const std::string& args) {
    static int serial = 0;
    const std::string capture = "/tmp/statfrob_cli_capture_" + std::to_string(serial++) + ".txt";
    const std::string cmd = std::string(STATFROB_CLI) + " " + args + " > " + capture + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(capture, std::ios::binary);
    r.out.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    std::remove(capture.c_str());
    return r;
}

Json parsed(const RunResult& r) { return Json::parse(r.out); }

// removes the wall-clock line so two equivalent runs compare byte-identical
std::string without_duration(const std::string& body) {
    std::istringstream in(body);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.find("\"duration_seconds\"") == std::string::npos) out << line << "\n";
    return out.str();
}

void write_points(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::trunc);
    REQUIRE(out.good());
    out << body;
}

}  // namespace

TEST_CASE("usage errors exit with the configuration code") {
    CHECK(run("").code == 2);                               // a subcommand is required
    CHECK(run("identities").code == 2);                     // --chart is required
    CHECK(run("no-such-subcommand --chart x.json").code == 2);
    CHECK(run("identities --chart " + fixture("coupled_cubic.json") + " --no-such-flag").code ==
          2);
    // exactly one point source
    CHECK(run("identities --chart " + fixture("coupled_cubic.json")).code == 2);
    CHECK(run("identities --chart " + fixture("coupled_cubic.json") + " --points " +
              fixture("points_bcn2.json") + " --sample 2 --seed 1")
              .code == 2);
    // sampling without a seed is refused, so runs are reproducible by default
    const RunResult r =
        run("identities --chart " + fixture("coupled_cubic.json") + " --sample 2");
    CHECK(r.code == 2);
    CHECK(r.out.find("--seed is required") != std::string::npos);

    CHECK(run("identities --chart " + fixture("malformed.json") + " --sample 1 --seed 1").code ==
          2);
    CHECK(run("identities --chart /tmp/does_not_exist_42.json --sample 1 --seed 1").code == 2);
    CHECK(run("--version").code == 0);
}

TEST_CASE("identity suite over fixtures") {
    const RunResult ok = run("identities --chart " + fixture("coupled_cubic.json") +
                             " --sample 3 --seed 7");
    CHECK(ok.code == 0);
    const Json rep = parsed(ok);
    CHECK(rep["pass"].get<bool>());
    CHECK(rep["config"]["subcommand"] == "identities");
    CHECK(rep["config"]["seed"] == 7);
    CHECK(rep["results"].size() == 3);
    CHECK(rep["results"][0]["pass"].get<bool>());
    CHECK(rep["results"][0]["detail"].size() == 7);

    // an unreachable tolerance turns the same run into a reported failure
    const RunResult tight = run("identities --chart " + fixture("coupled_cubic.json") +
                                " --sample 3 --seed 7 --identity-tol 1e-30");
    CHECK(tight.code == 1);
    CHECK_FALSE(parsed(tight)["pass"].get<bool>());

    // a metric that loses positivity is an evaluation error, not a failure
    const RunResult bad = run("identities --chart " + fixture("nonspd_region.json") +
                              " --points " + fixture("points_nonspd.json"));
    CHECK(bad.code == 3);
    CHECK(bad.out.find("evaluation error") != std::string::npos);
}

TEST_CASE("reports are deterministic and format-switchable") {
    const std::string args = "bcn --chart " + fixture("bcn2s.json") + " --points " +
                             fixture("points_bcn2.json");
    const RunResult a = run(args);
    const RunResult b = run(args);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(without_duration(a.out) == without_duration(b.out));

    // sampled runs with the same seed are byte-stable too
    const std::string sampled = "frobenius --chart " + fixture("isothermal_unit.json") +
                                " --sample 4 --seed 11";
    CHECK(without_duration(run(sampled).out) == without_duration(run(sampled).out));

    const RunResult text = run(args + " --format text");
    CHECK(text.code == 0);
    CHECK(text.out.find("pass: true") != std::string::npos);
    CHECK(text.out.find("worst_pair:") != std::string::npos);
    CHECK_THROWS(Json::parse(text.out));  // genuinely a different format

    // --out writes the same report atomically and keeps stdout quiet
    const std::string out_path = "/tmp/statfrob_cli_out_test.json";
    std::remove(out_path.c_str());
    const RunResult filed = run(args + " --out " + out_path);
    CHECK(filed.code == 0);
    CHECK(filed.out.empty());
    std::ifstream in(out_path, std::ios::binary);
    const std::string body{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    CHECK(without_duration(body) == without_duration(a.out));
    std::remove(out_path.c_str());
}

TEST_CASE("frobenius diagnostics") {
    // all-ones structure: associative but degenerate, so no unit exists and
    // the report says so without failing
    const RunResult flat = run("frobenius --chart " + fixture("isothermal_flat.json") +
                               " --sample 2 --seed 5");
    CHECK(flat.code == 0);
    const Json frep = parsed(flat);
    CHECK(frep["pass"].get<bool>());
    for (const Json& point : frep["results"]) {
        CHECK(point["associative"].get<bool>());
        CHECK(point["unit"].is_null());
        CHECK(point["idempotents"].is_null());
        CHECK(point["constant_curvature"].is_number());
    }

    // this structure carries an exact two-sided unit at every point
    const RunResult un = run("frobenius --chart " + fixture("isothermal_unit.json") +
                             " --sample 3 --seed 5");
    CHECK(un.code == 0);
    const Json urep = parsed(un);
    CHECK(urep["pass"].get<bool>());
    for (const Json& point : urep["results"]) {
        CHECK(point["associative"].get<bool>());
        CHECK_THAT(point["unit"][0].get<double>(), Catch::Matchers::WithinAbs(-0.5, 1e-9));
        CHECK_THAT(point["unit"][1].get<double>(), Catch::Matchers::WithinAbs(0.5, 1e-9));
        CHECK(point["unit_law_residual"].get<double>() < 1e-9);
        CHECK(point["idempotent_law_residual"].get<double>() < 1e-9);
        CHECK(point["spectral"]["lambda"].size() == 2);
    }

    // a generic curved chart is simply not associative; nothing to check,
    // nothing failed
    const RunResult curved = run("frobenius --chart " + fixture("isothermal_curved.json") +
                                 " --sample 2 --seed 5");
    CHECK(curved.code == 0);
    const Json crep = parsed(curved);
    for (const Json& point : crep["results"]) {
        CHECK_FALSE(point["associative"].get<bool>());
        // dimension two has a single tangent plane, so the constant-curvature
        // fit always resolves to that plane's value even here
        CHECK(point["constant_curvature"].is_number());
        CHECK(point["unit"].is_null());
    }
}

TEST_CASE("wdvv residuals for potential charts") {
    const RunResult diag = run("wdvv --chart " + fixture("diag_cubic.json") +
                               " --sample 4 --seed 3");
    CHECK(diag.code == 0);
    const Json drep = parsed(diag);
    CHECK(drep["pass"].get<bool>());
    CHECK(drep["results"].size() == 4);
    CHECK(drep["results"][0]["residual"].get<double>() < 1e-8);

    write_points("/tmp/statfrob_pts_center.json", "[[0.5, 0.5]]\n");
    const std::string coupled = "wdvv --chart " + fixture("coupled_cubic.json") +
                                " --points /tmp/statfrob_pts_center.json";
    const RunResult fail = run(coupled);
    CHECK(fail.code == 1);
    const Json frep = parsed(fail);
    CHECK_FALSE(frep["pass"].get<bool>());
    CHECK(frep["results"][0]["residual"].get<double>() > 1e-3);

    // --tol rescales the default; an explicit --wdvv-tol beats both
    CHECK(run(coupled + " --tol 1e8").code == 0);
    CHECK(run(coupled + " --tol 1e-30 --wdvv-tol 1.0").code == 0);
    CHECK(run(coupled + " --tol 1e8 --wdvv-tol 1e-12").code == 1);
}

TEST_CASE("wdvv residuals for prepotential configs") {
    write_points("/tmp/statfrob_pts_prep.json", "[[0.5, 0.7], [0.8, 0.4]]\n");
    const RunResult listed = run("wdvv --chart " + fixture("prepotential_cubic.json") +
                                 " --points /tmp/statfrob_pts_prep.json");
    CHECK(listed.code == 0);
    const Json rep = parsed(listed);
    CHECK(rep["pass"].get<bool>());
    CHECK(rep["results"][0]["pairs"].size() == 1);
    CHECK_FALSE(rep["results"][0].contains("h"));

    // the fixture carries a domain, so sampling works as well
    const RunResult sampled = run("wdvv --chart " + fixture("prepotential_cubic.json") +
                                  " --sample 3 --seed 9");
    CHECK(sampled.code == 0);
    CHECK(parsed(sampled)["results"].size() == 3);

    // the closed-form family also goes through this subcommand, with the
    // scalar-matrix diagnostics included per point
    const RunResult bcn = run("wdvv --chart " + fixture("bcn2.json") + " --points " +
                              fixture("points_bcn2.json"));
    CHECK(bcn.code == 0);
    CHECK(parsed(bcn)["results"][0].contains("h"));
}

TEST_CASE("closed-form family verification") {
    const RunResult good = run("bcn --chart " + fixture("bcn2.json") + " --points " +
                               fixture("points_bcn2.json"));
    CHECK(good.code == 0);
    const Json grep = parsed(good);
    CHECK(grep["pass"].get<bool>());
    CHECK(grep["results"]["worst_pair"].get<double>() < 1e-12);
    CHECK(grep["results"]["params"]["r"] == 0.0);

    const RunResult sampled = run("bcn --chart " + fixture("bcn3.json") + " --sample 5 --seed 2");
    CHECK(sampled.code == 0);
    CHECK(parsed(sampled)["results"]["points"].size() == 5);

    // detaching r from the constraint flips the verdict
    const RunResult broken = run("bcn --chart " + fixture("bcn2.json") + " --points " +
                                 fixture("points_bcn2.json") + " --set-r 0.1");
    CHECK(broken.code == 1);
    const Json brep = parsed(broken);
    CHECK_FALSE(brep["pass"].get<bool>());
    CHECK(brep["config"]["r_override"] == 0.1);
    CHECK(brep["results"]["worst_diag_h"].get<double>() > 1e-3);

    // a point on a coth pole margin is an evaluation error
    const RunResult pole = run("bcn --chart " + fixture("bcn2.json") + " --points " +
                               fixture("points_pole.json"));
    CHECK(pole.code == 3);
    CHECK(pole.out.find("x1-x2") != std::string::npos);

    // the subcommand refuses non-family configs
    CHECK(run("bcn --chart " + fixture("coupled_cubic.json") + " --points " +
              fixture("points_bcn2.json"))
              .code == 2);
}

TEST_CASE("information tables for finite families") {
    const RunResult r = run("fisher --chart " + fixture("bernoulli.json") + " --points " +
                            fixture("points_theta.json"));
    CHECK(r.code == 0);
    const Json rep = parsed(r);
    CHECK(rep["pass"].get<bool>());
    CHECK_THAT(rep["results"][0]["g"][0][0].get<double>(),
               Catch::Matchers::WithinAbs(16.0 / 3.0, 1e-5));
    CHECK_THAT(rep["results"][0]["T"][0][0][0].get<double>(),
               Catch::Matchers::WithinAbs(128.0 / 9.0, 1e-4));

    CHECK(run("fisher --chart " + fixture("categorical_logit.json") + " --sample 2 --seed 4")
              .code == 0);
    // only finite families have information tables
    CHECK(run("fisher --chart " + fixture("coupled_cubic.json") + " --sample 1 --seed 1").code ==
          2);
    // evaluation failures surface with their own exit code
    const RunResult unnorm = run("fisher --chart " + fixture("unnormalized_family.json") +
                                 " --sample 1 --seed 1");
    CHECK(unnorm.code == 3);
    CHECK(unnorm.out.find("evaluation error") != std::string::npos);
}

TEST_CASE("expression checking") {
    const RunResult ok = run("parse-check \"x1^2 + tanh(x2)\" --dim 2 --at 1,0");
    CHECK(ok.code == 0);
    const Json rep = parsed(ok);
    CHECK(rep["results"]["value"].get<double>() == 1.0);
    CHECK_FALSE(rep["results"]["canonical"].get<std::string>().empty());

    CHECK(run("parse-check \"x1 +\"").code == 2);
    CHECK(run("parse-check \"x3\" --dim 2").code == 2);
    CHECK(run("parse-check \"x1\" --dim 1 --at 1,2").code == 2);
    // evaluation outside an expression's domain is an evaluation error
    CHECK(run("parse-check \"log(x1)\" --dim 1 --at -1").code == 3);
}
