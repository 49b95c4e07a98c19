#pragma once

// Persistence: a binary matrix container (row-major complex128,
// little-endian, with a dim/kind header), JSON forms for small matrices,
// weight functions, metric and verification reports, and CSV helpers.

#include "thermalab/metrics.hpp"
#include "thermalab/verify.hpp"
#include "thermalab/weights.hpp"

#include <json.hpp>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

namespace thermalab {

using json = nlohmann::json;

inline constexpr const char* version_string = "thermalab 0.1.0";

namespace io_detail {

inline constexpr char matrix_magic[8] = {'T', 'L', 'A', 'B', 'M', 'A', 'T', '1'};

}  // namespace io_detail

inline void save_matrix(const std::string& path, const Matrix& m,
                        SystemKind kind = SystemKind::hamiltonian) {
    if (m.rows() != m.cols()) throw std::invalid_argument("save_matrix: matrix not square");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_matrix: cannot open " + path);
    out.write(io_detail::matrix_magic, 8);
    std::uint64_t dim = static_cast<std::uint64_t>(m.rows());
    std::uint32_t k = (kind == SystemKind::floquet) ? 1u : 0u;
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(&k), sizeof(k));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            double re = m(i, j).real(), im = m(i, j).imag();
            out.write(reinterpret_cast<const char*>(&re), sizeof(re));
            out.write(reinterpret_cast<const char*>(&im), sizeof(im));
        }
    if (!out) throw std::runtime_error("save_matrix: write failed for " + path);
}

inline std::pair<Matrix, SystemKind> load_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_matrix: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, io_detail::matrix_magic, 8) != 0)
        throw std::runtime_error("load_matrix: bad magic in " + path);
    std::uint64_t dim = 0;
    std::uint32_t k = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    in.read(reinterpret_cast<char*>(&k), sizeof(k));
    if (!in || dim == 0 || dim > (1u << 20)) throw std::runtime_error("load_matrix: bad header");
    Matrix m(dim, dim);
    for (std::uint64_t i = 0; i < dim; ++i)
        for (std::uint64_t j = 0; j < dim; ++j) {
            double re = 0.0, im = 0.0;
            in.read(reinterpret_cast<char*>(&re), sizeof(re));
            in.read(reinterpret_cast<char*>(&im), sizeof(im));
            m(i, j) = cxd(re, im);
        }
    if (!in) throw std::runtime_error("load_matrix: truncated file " + path);
    return {std::move(m), k == 1 ? SystemKind::floquet : SystemKind::hamiltonian};
}

// JSON forms for debugging-scale matrices.
inline json matrix_to_json(const Matrix& m, int max_dim = 64) {
    if (m.rows() > max_dim) throw std::invalid_argument("matrix_to_json: too large for JSON");
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            row.push_back(json::array({m(i, j).real(), m(i, j).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    size_t rows = j.size();
    Matrix m(rows, rows);
    for (size_t i = 0; i < rows; ++i) {
        if (j[i].size() != rows) throw std::invalid_argument("matrix_from_json: not square");
        for (size_t k = 0; k < rows; ++k)
            m(i, k) = cxd(j[i][k][0].get<double>(), j[i][k][1].get<double>());
    }
    return m;
}

inline json weight_to_json(const WeightFunction& w) {
    json atoms = json::array();
    for (const auto& a : w.atoms) atoms.push_back(json::array({a.t, a.weight}));
    json out;
    out["atoms"] = std::move(atoms);
    out["provenance"] = w.completely_positive() ? "cp_pointset" : "generic";
    if (w.completely_positive()) out["pointset"] = w.pointset;
    return out;
}

inline WeightFunction weight_from_json(const json& j) {
    if (j.contains("pointset")) return cp_from_pointset(j["pointset"].get<std::vector<double>>());
    std::vector<WeightAtom> atoms;
    for (const auto& a : j.at("atoms")) atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    return make_weight(std::move(atoms));
}

inline json metric_report_to_json(const MetricReport& r) {
    json out;
    out["value"] = r.value;
    out["epsilon"] = r.epsilon;
    out["context"]["kind"] = r.context.kind;
    out["context"]["shell_d"] = r.context.shell_d;
    out["context"]["delta_e"] = r.context.delta_e;
    out["context"]["thermal_value"] = r.context.thermal_value;
    return out;
}

inline json verification_report_to_json(const VerificationReport& r) {
    json out;
    out["claim_id"] = r.claim_id;
    out["lhs"] = r.lhs;
    out["rhs"] = r.rhs;
    out["margin"] = r.margin;
    out["holds"] = r.holds;
    out["instance"] = r.instance;
    out["notes"] = r.notes;
    return out;
}

// 64-bit FNV-1a over the canonical (sorted-key) dump; embedded in every
// output file so reruns are comparable.
inline std::string config_hash(const json& config) {
    std::string dump = config.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string csv_header_comment(const std::string& hash) {
    return std::string("# ") + version_string + " config=" + hash + "\n";
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace thermalab
