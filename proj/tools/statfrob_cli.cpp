// statfrob — command-line driver over the header library.
//
// Subcommands:
//   identities   curvature identity suite of the connection family per point
//   frobenius    product diagnostics: associativity, curvature constancy,
//                unit, idempotents, Yukawa scalar
//   wdvv         WDVV residuals (curvature form for hessian charts, matrix
//                form for prepotential configs)
//   bcn          full closed-form family verification, B = h·I plus WDVV
//   fisher       information metric and skewness tables of a finite family
//   parse-check  expression validation and canonical printing
//
// Exit codes: 0 all checks passed, 1 some check failed, 2 configuration or
// parse error, 3 evaluation error (singular metric, pole, domain violation).
//
// Reports are JSON objects with sorted keys; the same config and seed
// reproduce the same bytes except for the "duration_seconds" field. Text
// format is rendered from the JSON tree. --out writes are atomic.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "statfrob/chart_json.hpp"
#include "statfrob/frobenius.hpp"
#include "statfrob/geometry.hpp"
#include "statfrob/report_json.hpp"
#include "statfrob/wdvv.hpp"

namespace {

using namespace statfrob;

constexpr const char* kVersion = "1.0.0";

constexpr int kExitPass = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEvaluation = 3;

constexpr std::uint64_t kDefaultAlgorithmSeed = 20240817;

struct CommonOpts {
    std::string chart_path;
    std::string points_path;
    int sample_count = 0;
    std::uint64_t seed = 0;
    bool seed_given = false;
    double tol_scale = 1.0;
    std::string out_path;
    std::string format = "json";
};

// Attaches the shared flags to a subcommand. The chart flag doubles as the
// prepotential-config path for wdvv/bcn.
void add_common(CLI::App* cmd, CommonOpts& o, bool chart_required = true) {
    auto* chart = cmd->add_option("--chart", o.chart_path, "chart or prepotential JSON path");
    if (chart_required) chart->required();
    cmd->add_option("--points", o.points_path, "JSON file with an array of points");
    cmd->add_option("--sample", o.sample_count, "number of points to sample from the domain")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--seed", o.seed, "RNG seed (required with --sample)")
        ->each([&o](const std::string&) { o.seed_given = true; });
    cmd->add_option("--tol", o.tol_scale,
                    "multiplier applied to every default tolerance (explicit per-check "
                    "flags win)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", o.out_path, "write the report here (atomic) instead of stdout");
    cmd->add_option("--format", o.format, "report format")
        ->check(CLI::IsMember({"json", "text"}));
}

// 0 means "not set" for the per-check absolute overrides; the flags are
// positive-checked so 0 cannot be given explicitly.
double resolve_tol(double base, const CommonOpts& o, double override_value) {
    return override_value > 0.0 ? override_value : base * o.tol_scale;
}

std::vector<Vec> listed_points(const CommonOpts& o, int dim) {
    std::vector<Vec> pts = points_from_json(load_json_file(o.points_path), dim);
    if (pts.empty()) throw ConfigError("point list in '" + o.points_path + "' is empty");
    return pts;
}

void require_one_source(const CommonOpts& o) {
    const bool listed = !o.points_path.empty();
    const bool sampled = o.sample_count > 0;
    if (listed == sampled)
        throw ConfigError("exactly one of --points or --sample is required");
    if (sampled && !o.seed_given) throw ConfigError("--seed is required when sampling");
}

std::vector<Vec> resolve_points(const CommonOpts& o, const ChartField& chart) {
    require_one_source(o);
    if (!o.points_path.empty()) return listed_points(o, chart.dim());
    Rng rng(o.seed);
    std::vector<Vec> pts;
    pts.reserve(static_cast<std::size_t>(o.sample_count));
    for (int i = 0; i < o.sample_count; ++i) pts.push_back(chart.sample_point(rng));
    return pts;
}

Json config_echo(const std::string& subcommand, const CommonOpts& o) {
    Json c;
    c["subcommand"] = subcommand;
    if (!o.chart_path.empty()) c["chart"] = o.chart_path;
    if (!o.points_path.empty()) c["points"] = o.points_path;
    if (o.sample_count > 0) c["sample"] = o.sample_count;
    if (o.seed_given) c["seed"] = o.seed;
    c["tol_scale"] = o.tol_scale;
    c["format"] = o.format;
    return c;
}

using Clock = std::chrono::steady_clock;

// Assembles the envelope, writes it, and converts the aggregate flag into
// the process exit code.
int emit(const CommonOpts& o, Json config, Json results, bool pass, Clock::time_point start) {
    Json report;
    report["tool_version"] = kVersion;
    report["config"] = std::move(config);
    report["results"] = std::move(results);
    report["pass"] = pass;
    report["duration_seconds"] =
        std::chrono::duration<double>(Clock::now() - start).count();
    const std::string body =
        o.format == "text" ? render_text(report) : report.dump(2) + "\n";
    if (o.out_path.empty())
        std::cout << body;
    else
        write_file_atomic(o.out_path, body);
    return pass ? kExitPass : kExitChecksFailed;
}

// -- identities -------------------------------------------------------------

int cmd_identities(const CommonOpts& o, double identity_tol) {
    const auto start = Clock::now();
    const ChartField chart = chart_from_json(load_json_file(o.chart_path));
    const std::vector<Vec> pts = resolve_points(o, chart);
    const double tol = resolve_tol(1e-4, o, identity_tol);

    Json results = Json::array();
    bool pass = true;
    for (const Vec& x : pts) {
        IdentityReport r = identity_suite(chart, x, tol);
        pass = pass && r.pass;
        results.push_back(to_json(r));
    }
    return emit(o, config_echo("identities", o), std::move(results), pass, start);
}

// -- frobenius --------------------------------------------------------------

// Largest entry of K_e − I: zero exactly when e is a (two-sided) unit.
double unit_law_residual(const KOperator& k, const Vec& e) {
    const Mat ke = k.matrix_of(e);
    double worst = 0.0;
    for (int i = 0; i < ke.rows(); ++i)
        for (int j = 0; j < ke.cols(); ++j)
            worst = std::max(worst, std::abs(ke(i, j) - (i == j ? 1.0 : 0.0)));
    return worst;
}

double idempotent_law_residual(const KOperator& k, const IdempotentFrame& frame) {
    const int n = frame.dim;
    double worst = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
            Vec ua(n), ub(n);
            for (int i = 0; i < n; ++i) {
                ua[i] = frame.u(i, a);
                ub[i] = frame.u(i, b);
            }
            const Vec prod = product(k, ua, ub);
            for (int i = 0; i < n; ++i)
                worst = std::max(worst, std::abs(prod[i] - (a == b ? ua[i] : 0.0)));
        }
    return worst;
}

int cmd_frobenius(const CommonOpts& o, double bracket_tol_flag, double law_tol_flag) {
    const auto start = Clock::now();
    const ChartField chart = chart_from_json(load_json_file(o.chart_path));
    const std::vector<Vec> pts = resolve_points(o, chart);
    const double bracket_tol = resolve_tol(1e-8, o, bracket_tol_flag);
    const double law_tol = resolve_tol(1e-9, o, law_tol_flag);
    const std::uint64_t seed = o.seed_given ? o.seed : kDefaultAlgorithmSeed;

    Json results = Json::array();
    bool pass = true;
    for (const Vec& x : pts) {
        auto [g, c] = chart.evaluate(x);
        const KOperator k = raise_index(c, g);

        Json r;
        r["point"] = x;
        const double br = bracket_residual(k);
        r["bracket_residual"] = br;
        r["associativity_residual"] = associativity_residual(k);
        const bool assoc = br <= bracket_tol;
        r["associative"] = assoc;
        const auto constant = check_constant_curvature(k, g, bracket_tol);
        r["constant_curvature"] = constant ? Json(*constant) : Json(nullptr);
        r["yukawa"] = yukawa_term(c, g);

        bool point_pass = true;
        r["unit"] = nullptr;
        r["idempotents"] = nullptr;
        if (assoc) {
            const SpectralData sd = simultaneous_diagonalize(k, g, seed, bracket_tol);
            r["spectral"] = to_json(sd);
            if (auto e = unit(sd)) {
                r["unit"] = *e;
                const double ulaw = unit_law_residual(k, *e);
                r["unit_law_residual"] = ulaw;
                point_pass = point_pass && ulaw <= law_tol;
            }
            try {
                const IdempotentFrame frame = canonical_idempotents(sd, g);
                r["idempotents"] = to_json(frame);
                const double ilaw = idempotent_law_residual(k, frame);
                r["idempotent_law_residual"] = ilaw;
                point_pass = point_pass && ilaw <= law_tol;
            } catch (const DegenerateOperator&) {
                // a zero eigenvalue direction has no idempotent: a finding,
                // consistent with the absent unit, not a failure
            }
        }
        r["pass"] = point_pass;
        pass = pass && point_pass;
        results.push_back(std::move(r));
    }
    return emit(o, config_echo("frobenius", o), std::move(results), pass, start);
}

// -- wdvv -------------------------------------------------------------------

std::vector<Vec> resolve_prepotential_points(const CommonOpts& o, const Json& cfg,
                                             const Prepotential& p) {
    require_one_source(o);
    if (!o.points_path.empty()) return listed_points(o, p.dim());
    if (p.kind() == PrepKind::bcn) {
        const ChartField chart = ChartField::make_bcn(
            p.bcn_params(), cfg.contains("domain")
                                ? detail::field_domain(cfg, p.bcn_params().n)
                                : DomainBox{});
        Rng rng(o.seed);
        std::vector<Vec> pts;
        for (int i = 0; i < o.sample_count; ++i) pts.push_back(chart.sample_point(rng));
        return pts;
    }
    if (!cfg.contains("domain"))
        throw ConfigError("sampling a generic prepotential needs a 'domain' field; "
                          "use --points otherwise");
    const DomainBox box = detail::field_domain(cfg, p.dim());
    Rng rng(o.seed);
    std::vector<Vec> pts;
    for (int i = 0; i < o.sample_count; ++i) pts.push_back(rng.point_in_box(box));
    return pts;
}

int cmd_wdvv(const CommonOpts& o, double wdvv_tol_flag) {
    const auto start = Clock::now();
    const Json cfg = load_json_file(o.chart_path);
    const std::string type = detail::field_string(cfg, "type");
    const double tol = resolve_tol(1e-8, o, wdvv_tol_flag);

    Json results = Json::array();
    bool pass = true;
    if (type == "hessian") {
        const ChartField chart = chart_from_json(cfg);
        for (const Vec& x : resolve_points(o, chart)) {
            const double res = wdvv_residual_hessian(chart, x);
            const bool ok = res <= tol;
            results.push_back({{"point", x}, {"residual", res}, {"pass", ok}});
            pass = pass && ok;
        }
    } else {
        const Prepotential p = prepotential_from_json(cfg);
        for (const Vec& x : resolve_prepotential_points(o, cfg, p)) {
            WdvvReport r = wdvv_matrix_residual(p, x, tol);
            pass = pass && r.pass;
            results.push_back(to_json(r));
        }
    }
    return emit(o, config_echo("wdvv", o), std::move(results), pass, start);
}

// -- bcn --------------------------------------------------------------------

int cmd_bcn(const CommonOpts& o, double wdvv_tol_flag, double r_override, bool r_given) {
    const auto start = Clock::now();
    const Json cfg = load_json_file(o.chart_path);
    if (detail::field_string(cfg, "type") != "bcn")
        throw ConfigError("field 'type' must be 'bcn' for this subcommand");
    BcnParams params = detail::field_bcn_params(cfg);
    if (r_given) params.r = r_override;
    const double tol = resolve_tol(1e-8, o, wdvv_tol_flag);

    require_one_source(o);
    std::vector<Vec> pts;
    if (!o.points_path.empty()) {
        pts = listed_points(o, params.n);
    } else {
        // the pole-aware chart sampler keeps every point clear of the margin
        const ChartField chart = ChartField::make_bcn(
            params, cfg.contains("domain") ? detail::field_domain(cfg, params.n)
                                           : DomainBox{});
        Rng rng(o.seed);
        for (int i = 0; i < o.sample_count; ++i) pts.push_back(chart.sample_point(rng));
    }

    const AafReport rep = verify_aaf(params, pts, tol);
    Json config = config_echo("bcn", o);
    if (r_given) config["r_override"] = r_override;
    return emit(o, std::move(config), to_json(rep), rep.pass, start);
}

// -- fisher -----------------------------------------------------------------

int cmd_fisher(const CommonOpts& o) {
    const auto start = Clock::now();
    const ChartField chart = chart_from_json(load_json_file(o.chart_path));
    if (chart.kind() != ChartKind::finite_family)
        throw ConfigError("field 'type' must be 'finite_family' for this subcommand");
    const std::vector<Vec> pts = resolve_points(o, chart);

    Json results = Json::array();
    for (const Vec& theta : pts) {
        auto [g, t] = fisher_finite_family(chart, theta);
        results.push_back(
            {{"point", theta}, {"g", to_json(g.entries())}, {"T", to_json(t.entries())}});
    }
    return emit(o, config_echo("fisher", o), std::move(results), true, start);
}

// -- parse-check ------------------------------------------------------------

int cmd_parse_check(const CommonOpts& o, const std::string& expression, int dim,
                    const std::vector<double>& at) {
    const auto start = Clock::now();
    const ScalarExpr e = ScalarExpr::parse(expression, dim);

    Json r;
    r["expression"] = expression;
    r["canonical"] = e.print();
    r["dim"] = dim;
    if (!at.empty()) {
        if (static_cast<int>(at.size()) != dim)
            throw ConfigError("--at needs exactly " + std::to_string(dim) + " coordinates");
        r["value"] = e.eval(at);
    }
    Json config;
    config["subcommand"] = "parse-check";
    config["tol_scale"] = o.tol_scale;
    config["format"] = o.format;
    return emit(o, std::move(config), std::move(r), true, start);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tensor diagnostics for metric-and-cubic-form structures"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts identities_o, frobenius_o, wdvv_o, bcn_o, fisher_o, parse_o;
    double identity_tol = 0.0, frob_bracket_tol = 0.0, frob_law_tol = 0.0;
    double wdvv_tol = 0.0, bcn_tol = 0.0, bcn_r = 0.0;
    std::string expression;
    int parse_dim = 8;
    std::vector<double> parse_at;

    CLI::App* identities = app.add_subcommand("identities", "curvature identity suite");
    add_common(identities, identities_o);
    identities->add_option("--identity-tol", identity_tol, "absolute residual tolerance")
        ->check(CLI::PositiveNumber);

    CLI::App* frobenius = app.add_subcommand("frobenius", "product structure diagnostics");
    add_common(frobenius, frobenius_o);
    frobenius->add_option("--bracket-tol", frob_bracket_tol, "associativity threshold")
        ->check(CLI::PositiveNumber);
    frobenius->add_option("--law-tol", frob_law_tol, "unit/idempotent law tolerance")
        ->check(CLI::PositiveNumber);

    CLI::App* wdvv = app.add_subcommand("wdvv", "WDVV residuals");
    add_common(wdvv, wdvv_o);
    wdvv->add_option("--wdvv-tol", wdvv_tol, "residual tolerance")
        ->check(CLI::PositiveNumber);

    CLI::App* bcn = app.add_subcommand("bcn", "closed-form family verification");
    add_common(bcn, bcn_o);
    bcn->add_option("--wdvv-tol", bcn_tol, "residual tolerance")->check(CLI::PositiveNumber);
    CLI::Option* r_opt =
        bcn->add_option("--set-r", bcn_r, "override the constrained r coefficient");

    CLI::App* fisher = app.add_subcommand("fisher", "finite-family information tables");
    add_common(fisher, fisher_o);

    CLI::App* parse_check = app.add_subcommand("parse-check", "expression validation");
    add_common(parse_check, parse_o, /*chart_required=*/false);
    parse_check->add_option("expression", expression, "expression to parse")->required();
    parse_check->add_option("--dim", parse_dim, "number of variables in scope")
        ->check(CLI::PositiveNumber);
    parse_check->add_option("--at", parse_at, "evaluate at this comma-separated point")
        ->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(identities)) return cmd_identities(identities_o, identity_tol);
        if (app.got_subcommand(frobenius))
            return cmd_frobenius(frobenius_o, frob_bracket_tol, frob_law_tol);
        if (app.got_subcommand(wdvv)) return cmd_wdvv(wdvv_o, wdvv_tol);
        if (app.got_subcommand(bcn))
            return cmd_bcn(bcn_o, bcn_tol, bcn_r, r_opt->count() > 0);
        if (app.got_subcommand(fisher)) return cmd_fisher(fisher_o);
        if (app.got_subcommand(parse_check))
            return cmd_parse_check(parse_o, expression, parse_dim, parse_at);
        std::cerr << "error: no subcommand selected\n";
        return kExitConfig;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "evaluation error: " << e.what() << "\n";
        return kExitEvaluation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitEvaluation;
    }
}
