#pragma once

// JSON wire formats on the output side. Each report struct converts to a
// nlohmann::json value whose object keys are stored sorted, so serializing
// the same report twice yields byte-identical text — the property the CLI's
// determinism contract and the golden-file tests rely on. The human-readable
// text format is rendered *from* the JSON tree, never assembled separately,
// so the two formats cannot drift apart.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "statfrob/chart.hpp"
#include "statfrob/errors.hpp"
#include "statfrob/frobenius.hpp"
#include "statfrob/geometry.hpp"
#include "statfrob/linalg.hpp"
#include "statfrob/wdvv.hpp"

namespace statfrob {

inline Json to_json(const Vec& v) { return Json(v); }

inline Json to_json(const Mat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Json to_json(const Tensor3& t) {
    const int n = t.dim();
    Json out = Json::array();
    for (int i = 0; i < n; ++i) {
        Json plane = Json::array();
        for (int j = 0; j < n; ++j) {
            Json row = Json::array();
            for (int k = 0; k < n; ++k) row.push_back(t(i, j, k));
            plane.push_back(std::move(row));
        }
        out.push_back(std::move(plane));
    }
    return out;
}

// Columns of a basis/frame matrix as a list of vectors, which is how the
// frame structs are meant to be read.
inline Json columns_json(const Mat& m) {
    Json cols = Json::array();
    for (int j = 0; j < m.cols(); ++j) {
        Json col = Json::array();
        for (int i = 0; i < m.rows(); ++i) col.push_back(m(i, j));
        cols.push_back(std::move(col));
    }
    return cols;
}

inline Json to_json(const IdentityReport& r) {
    Json j;
    j["point"] = r.point;
    j["duality"] = r.duality;
    j["gauss"] = r.gauss;
    j["codazzi"] = r.codazzi;
    j["interpolation"] = r.zhang;
    j["interpolation_skew"] = r.zhang_skew;
    Json detail = Json::array();
    for (const auto& [name, res] : r.detail) detail.push_back({{"check", name}, {"residual", res}});
    j["detail"] = std::move(detail);
    j["max_residual"] = r.max_residual();
    j["tol"] = r.tol;
    j["pass"] = r.pass;
    return j;
}

inline Json to_json(const SpectralData& d) {
    Json j;
    j["dim"] = d.dim;
    j["basis"] = columns_json(d.basis);
    j["lambda"] = d.lambda;
    j["mu"] = d.mu;
    j["A"] = d.a_seq;
    j["winning_restarts"] = d.winning_restarts;
    return j;
}

inline Json to_json(const IdempotentFrame& f) {
    Json j;
    j["dim"] = f.dim;
    j["u"] = columns_json(f.u);
    j["norms"] = f.norms;
    return j;
}

inline Json to_json(const RigidityReport& r) {
    Json j;
    j["base_point"] = r.base_point;
    j["nabla_c_norm"] = r.nabla_c_norm;
    j["nabla_c_asymmetry"] = r.nabla_c_asymmetry;
    j["nabla_e_norm"] = r.nabla_e_norm;
    j["f"] = to_json(r.f_entries);
    j["u_parallel_defect"] = r.u_parallel_defect;
    j["u_norm_gradients"] = r.u_norm_gradients;
    j["cloud_size"] = r.cloud_size;
    return j;
}

inline Json to_json(const WdvvReport& r) {
    Json j;
    j["point"] = r.point;
    j["B"] = to_json(r.b);
    if (std::isfinite(r.h)) {
        j["h"] = r.h;
        j["b_offdiag_max"] = r.b_offdiag_max;
        j["b_diag_h_max"] = r.b_diag_h_max;
    }
    Json pairs = Json::array();
    for (const WdvvPair& p : r.pairs)
        pairs.push_back({{"i", p.i}, {"j", p.j}, {"residual", p.residual}});
    j["pairs"] = std::move(pairs);
    j["worst_pair"] = r.worst_pair;
    j["tol"] = r.tol;
    j["pass"] = r.pass;
    return j;
}

inline Json to_json(const AafReport& r) {
    Json j;
    j["params"] = {{"n", r.params.n},
                   {"s", r.params.s},
                   {"q", r.params.q},
                   {"r", r.params.r},
                   {"margin", r.params.margin}};
    Json pts = Json::array();
    for (const WdvvReport& w : r.points) pts.push_back(to_json(w));
    j["points"] = std::move(pts);
    j["worst_offdiag"] = r.worst_offdiag;
    j["worst_diag_h"] = r.worst_diag_h;
    j["worst_pair"] = r.worst_pair;
    j["tol"] = r.tol;
    j["pass"] = r.pass;
    return j;
}

// -- text rendering ---------------------------------------------------------

namespace detail {

inline bool is_scalar_array(const Json& j) {
    if (!j.is_array()) return false;
    for (const Json& v : j)
        if (v.is_object() || v.is_array()) return false;
    return true;
}

inline void render_text_node(const Json& j, std::ostream& os, int indent) {
    const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    if (j.is_object()) {
        for (const auto& [key, val] : j.items()) {
            if (val.is_object() || (val.is_array() && !is_scalar_array(val))) {
                os << pad << key << ":\n";
                render_text_node(val, os, indent + 1);
            } else {
                os << pad << key << ": " << val.dump() << "\n";
            }
        }
    } else if (j.is_array()) {
        int idx = 0;
        for (const Json& v : j) {
            if (v.is_object() || (v.is_array() && !is_scalar_array(v))) {
                os << pad << "- [" << idx << "]\n";
                render_text_node(v, os, indent + 1);
            } else {
                os << pad << "- " << v.dump() << "\n";
            }
            ++idx;
        }
    } else {
        os << pad << j.dump() << "\n";
    }
}

}  // namespace detail

// Indented key/value rendering of a JSON report for terminal reading.
inline std::string render_text(const Json& j) {
    std::ostringstream os;
    detail::render_text_node(j, os, 0);
    return os.str();
}

// Writes via a sibling temp file plus rename, so a crash mid-write can never
// leave a truncated report at the destination path.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot open '" + tmp + "' for writing");
        out << content;
        if (!out.flush()) throw ConfigError("failed writing '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw ConfigError("cannot rename '" + tmp + "' to '" + path + "'");
    }
}

}  // namespace statfrob
