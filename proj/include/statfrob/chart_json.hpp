#pragma once

// JSON wire formats on the input side: chart descriptions, prepotential
// descriptions, and point lists. Every schema violation raises ConfigError
// with the offending field named, so the CLI can print actionable messages
// and map them onto its exit-code contract.
//
// Chart schema:    {"type": "...", "dim": n, "domain": [[lo,hi] x n], ...}
//   explicit      g: upper-triangular expression list (n(n+1)/2, row-major),
//                 C: sorted-index expression list (n(n+1)(n+2)/6)
//   hessian       potential: expression
//   isothermal2d  conformal: expression, f: [f1..f4]        (dim fixed at 2)
//   bcn           n, s, q, margin? (domain optional; defaults per dimension)
//   finite_family log_probs: one expression per outcome (>= 2)
// Any chart may carry "fd": {"h_low", "h_third", "levels"} to override the
// finite-difference policy.
//
// Prepotential schema: the "bcn" object above, or
//   {"type": "prepotential", "dim": n, "F": expr, "A": [expr x n]}.
//
// Point lists are arrays of length-n number arrays.

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "statfrob/bcn.hpp"
#include "statfrob/chart.hpp"
#include "statfrob/errors.hpp"
#include "statfrob/expr.hpp"
#include "statfrob/fd.hpp"
#include "statfrob/linalg.hpp"
#include "statfrob/wdvv.hpp"

namespace statfrob {

using Json = nlohmann::json;

namespace detail {

inline const Json& require_field(const Json& j, const std::string& key) {
    if (!j.is_object())
        throw ConfigError("expected a JSON object carrying field '" + key + "'");
    auto it = j.find(key);
    if (it == j.end()) throw ConfigError("missing field '" + key + "'");
    return *it;
}

inline double field_number(const Json& j, const std::string& key) {
    const Json& v = require_field(j, key);
    if (!v.is_number()) throw ConfigError("field '" + key + "' must be a number");
    return v.get<double>();
}

inline int field_int(const Json& j, const std::string& key) {
    const Json& v = require_field(j, key);
    if (!v.is_number_integer()) throw ConfigError("field '" + key + "' must be an integer");
    return v.get<int>();
}

inline std::string field_string(const Json& j, const std::string& key) {
    const Json& v = require_field(j, key);
    if (!v.is_string()) throw ConfigError("field '" + key + "' must be a string");
    return v.get<std::string>();
}

inline ScalarExpr expr_at(const Json& v, int dim, const std::string& where) {
    if (!v.is_string())
        throw ConfigError("field '" + where + "' must be an expression string");
    try {
        return ScalarExpr::parse(v.get<std::string>(), dim);
    } catch (const ParseError& e) {
        throw ConfigError("field '" + where + "': " + e.what());
    }
}

inline std::vector<ScalarExpr> field_expr_list(const Json& j, const std::string& key, int dim) {
    const Json& v = require_field(j, key);
    if (!v.is_array())
        throw ConfigError("field '" + key + "' must be an array of expression strings");
    std::vector<ScalarExpr> out;
    out.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(expr_at(v[i], dim, key + "[" + std::to_string(i) + "]"));
    return out;
}

inline DomainBox field_domain(const Json& j, int dim) {
    const Json& v = require_field(j, "domain");
    if (!v.is_array() || static_cast<int>(v.size()) != dim)
        throw ConfigError("field 'domain' must be an array of " + std::to_string(dim) +
                          " [lo,hi] intervals");
    DomainBox box;
    box.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Json& iv = v[i];
        if (!iv.is_array() || iv.size() != 2 || !iv[0].is_number() || !iv[1].is_number())
            throw ConfigError("field 'domain[" + std::to_string(i) +
                              "]' must be a [lo,hi] number pair");
        box.emplace_back(iv[0].get<double>(), iv[1].get<double>());
    }
    return box;
}

inline FdPolicy optional_fd(const Json& j) {
    FdPolicy fd;
    auto it = j.find("fd");
    if (it == j.end()) return fd;
    if (!it->is_object()) throw ConfigError("field 'fd' must be an object");
    for (const auto& [key, val] : it->items()) {
        if (key == "h_low" || key == "h_third") {
            if (!val.is_number()) throw ConfigError("field 'fd." + key + "' must be a number");
            (key == "h_low" ? fd.h_low : fd.h_third) = val.get<double>();
        } else if (key == "levels") {
            if (!val.is_number_integer())
                throw ConfigError("field 'fd.levels' must be an integer");
            fd.levels = val.get<int>();
        } else {
            throw ConfigError("field 'fd." + key +
                              "' is not recognized (expected h_low, h_third, levels)");
        }
    }
    fd.validate();
    return fd;
}

// BC_n parameters from {"n", "s", "q", "margin"?}; "dim", when also present,
// must agree with "n".
inline BcnParams field_bcn_params(const Json& j) {
    const int n = j.contains("n") ? field_int(j, "n") : field_int(j, "dim");
    if (j.contains("n") && j.contains("dim") && field_int(j, "dim") != n)
        throw ConfigError("fields 'dim' and 'n' disagree");
    const double s = field_number(j, "s");
    const double q = field_number(j, "q");
    double margin = 1e-3;
    if (j.contains("margin")) margin = field_number(j, "margin");
    return BcnParams::make(n, s, q, margin);
}

}  // namespace detail

inline Json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ConfigError("invalid JSON in '" + path + "': " + e.what());
    }
}

inline ChartField chart_from_json(const Json& j) {
    const std::string type = detail::field_string(j, "type");
    const FdPolicy fd = detail::optional_fd(j);

    if (type == "bcn") {
        const BcnParams params = detail::field_bcn_params(j);
        DomainBox domain;
        if (j.contains("domain")) domain = detail::field_domain(j, params.n);
        return ChartField::make_bcn(params, std::move(domain), fd);
    }

    if (type == "isothermal2d") {
        if (j.contains("dim") && detail::field_int(j, "dim") != 2)
            throw ConfigError("field 'dim' must be 2 for an isothermal2d chart");
        DomainBox domain = detail::field_domain(j, 2);
        ScalarExpr conformal = detail::expr_at(detail::require_field(j, "conformal"), 2,
                                               "conformal");
        std::vector<ScalarExpr> f = detail::field_expr_list(j, "f", 2);
        if (f.size() != 4) throw ConfigError("field 'f' must list exactly f1..f4");
        return ChartField::make_isothermal2d(std::move(domain), std::move(conformal),
                                             std::move(f), fd);
    }

    const int dim = detail::field_int(j, "dim");
    if (dim < 1) throw ConfigError("field 'dim' must be positive");
    DomainBox domain = detail::field_domain(j, dim);

    if (type == "explicit") {
        std::vector<ScalarExpr> g = detail::field_expr_list(j, "g", dim);
        if (static_cast<int>(g.size()) != triangle_count(dim))
            throw ConfigError("field 'g' must list the " + std::to_string(triangle_count(dim)) +
                              " upper-triangular metric entries");
        std::vector<ScalarExpr> c = detail::field_expr_list(j, "C", dim);
        if (static_cast<int>(c.size()) != tetra_count(dim))
            throw ConfigError("field 'C' must list the " + std::to_string(tetra_count(dim)) +
                              " sorted-index cubic entries");
        return ChartField::make_explicit(dim, std::move(domain), std::move(g), std::move(c), fd);
    }
    if (type == "hessian") {
        ScalarExpr phi = detail::expr_at(detail::require_field(j, "potential"), dim, "potential");
        return ChartField::make_hessian(dim, std::move(domain), std::move(phi), fd);
    }
    if (type == "finite_family") {
        std::vector<ScalarExpr> lp = detail::field_expr_list(j, "log_probs", dim);
        return ChartField::make_finite_family(dim, std::move(domain), std::move(lp), fd);
    }
    throw ConfigError(
        "field 'type' must be one of explicit, hessian, isothermal2d, bcn, finite_family; got '" +
        type + "'");
}

inline Prepotential prepotential_from_json(const Json& j) {
    const std::string type = detail::field_string(j, "type");
    if (type == "bcn") return Prepotential::make_bcn(detail::field_bcn_params(j));
    if (type == "prepotential") {
        const int dim = detail::field_int(j, "dim");
        if (dim < 1) throw ConfigError("field 'dim' must be positive");
        ScalarExpr f = detail::expr_at(detail::require_field(j, "F"), dim, "F");
        std::vector<ScalarExpr> a;
        if (j.contains("A")) {
            a = detail::field_expr_list(j, "A", dim);
            if (static_cast<int>(a.size()) != dim)
                throw ConfigError("field 'A' must list one unit-coefficient expression per "
                                  "coordinate (" +
                                  std::to_string(dim) + ")");
        }
        return Prepotential::make_generic(dim, std::move(f), std::move(a),
                                          detail::optional_fd(j));
    }
    throw ConfigError("field 'type' must be 'bcn' or 'prepotential' for a WDVV run; got '" +
                      type + "'");
}

// A point list: [[x1..xn], ...]. dim = 0 accepts any (consistent) width.
inline std::vector<Vec> points_from_json(const Json& j, int dim) {
    if (!j.is_array()) throw ConfigError("point list must be a JSON array of points");
    std::vector<Vec> pts;
    pts.reserve(j.size());
    for (std::size_t p = 0; p < j.size(); ++p) {
        const Json& row = j[p];
        const std::string where = "points[" + std::to_string(p) + "]";
        if (!row.is_array()) throw ConfigError("field '" + where + "' must be a number array");
        if (dim > 0 && static_cast<int>(row.size()) != dim)
            throw ConfigError("field '" + where + "' must have " + std::to_string(dim) +
                              " coordinates, got " + std::to_string(row.size()));
        Vec x;
        x.reserve(row.size());
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!row[c].is_number())
                throw ConfigError("field '" + where + "[" + std::to_string(c) +
                                  "]' must be a number");
            x.push_back(row[c].get<double>());
        }
        if (!pts.empty() && x.size() != pts.front().size())
            throw ConfigError("field '" + where + "' has inconsistent dimension");
        pts.push_back(std::move(x));
    }
    return pts;
}

}  // namespace statfrob
