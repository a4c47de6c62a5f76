#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qreturn/builders.hpp"
#include "qreturn/channel.hpp"
#include "qreturn/ensemble.hpp"
#include "qreturn/recurrence.hpp"

namespace qreturn {

using Json = nlohmann::ordered_json;

/// Shortest round-trippable decimal form; infinities become "inf" since
/// JSON and CSV have no infinity literal.
inline std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// complex matrices <-> [re, im] nested arrays (row-major)

inline Json complex_to_json(const Complex& z) {
    return Json::array({z.real(), z.imag()});
}

inline Complex complex_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError("expected a [re, im] pair");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline Json matrix_to_json(const ComplexMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k)
            row.push_back(complex_to_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline ComplexMatrix matrix_from_json(const Json& j, Eigen::Index dim) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != dim)
        throw ParseError("matrix must have " + std::to_string(dim) + " rows");
    ComplexMatrix m(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        const Json& row = j[i];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim)
            throw ParseError("matrix row must have " + std::to_string(dim) +
                             " entries");
        for (Eigen::Index k = 0; k < dim; ++k)
            m(i, k) = complex_from_json(row[k]);
    }
    return m;
}

// ---------------------------------------------------------------------------
// channel spec files: { "dim": int, "kraus": [ matrix, ... ] }

inline Json channel_to_json(const QuantumChannel& channel) {
    Json j;
    j["dim"] = channel.dim();
    Json kraus = Json::array();
    for (const auto& a : channel.kraus()) kraus.push_back(matrix_to_json(a));
    j["kraus"] = std::move(kraus);
    return j;
}

inline QuantumChannel channel_from_json(const Json& j, const Tolerance& tol = {}) {
    if (!j.is_object() || !j.contains("dim") || !j.contains("kraus"))
        throw ParseError("channel spec needs \"dim\" and \"kraus\"");
    if (!j["dim"].is_number_integer() || j["dim"].get<int>() < 1)
        throw ParseError("\"dim\" must be a positive integer");
    const auto dim = j["dim"].get<Eigen::Index>();
    if (!j["kraus"].is_array() || j["kraus"].empty())
        throw ParseError("\"kraus\" must be a non-empty array of matrices");
    std::vector<ComplexMatrix> kraus;
    kraus.reserve(j["kraus"].size());
    for (const auto& mat : j["kraus"]) kraus.push_back(matrix_from_json(mat, dim));
    return QuantumChannel(dim, std::move(kraus), tol);
}

inline Json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

inline QuantumChannel load_channel_file(const std::string& path,
                                        const Tolerance& tol = {}) {
    return channel_from_json(parse_json_file(path), tol);
}

// ---------------------------------------------------------------------------
// builder specs: { "family": ..., parameters... }

inline BuilderSpec builder_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("family"))
        throw ParseError("builder spec needs a \"family\"");
    BuilderSpec spec;
    const std::string family = j["family"].get<std::string>();
    if (family == "star")
        spec.family = BuilderSpec::Family::Star;
    else if (family == "decoherence")
        spec.family = BuilderSpec::Family::Decoherence;
    else if (family == "transfer")
        spec.family = BuilderSpec::Family::Transfer;
    else if (family == "loop")
        spec.family = BuilderSpec::Family::Loop;
    else if (family == "cue")
        spec.family = BuilderSpec::Family::Cue;
    else if (family == "disk_hamiltonian")
        spec.family = BuilderSpec::Family::DiskHamiltonian;
    else
        throw ParseError("unknown builder family \"" + family + "\"");

    try {
        if (j.contains("nodes")) spec.nodes = j["nodes"].get<int>();
        if (j.contains("d")) spec.rate = j["d"].get<double>();
        if (j.contains("target")) spec.target = j["target"].get<int>();
        if (j.contains("source")) spec.source = j["source"].get<int>();
        if (j.contains("radius")) spec.radius = j["radius"].get<double>();
        if (j.contains("random_diagonal"))
            spec.random_diagonal = j["random_diagonal"].get<bool>();
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("hoppings"))
            for (const auto& h : j["hoppings"])
                spec.hoppings.push_back(complex_from_json(h));
        if (j.contains("unitary")) {
            const Json& u = j["unitary"];
            const std::string kind = u.value("kind", "none");
            if (kind == "cue")
                spec.unitary = BuilderSpec::UnitaryKind::Cue;
            else if (kind == "disk")
                spec.unitary = BuilderSpec::UnitaryKind::Disk;
            else if (kind == "none")
                spec.unitary = BuilderSpec::UnitaryKind::None;
            else
                throw ParseError("unknown unitary kind \"" + kind + "\"");
            if (u.contains("seed")) spec.unitary_seed = u["seed"].get<std::uint64_t>();
            if (u.contains("radius")) spec.unitary_radius = u["radius"].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("builder spec: ") + e.what());
    }
    return spec;
}

inline EnsembleSpec ensemble_from_json(const Json& j) {
    if (!j.is_object() || !j.contains("builder") || !j.contains("sweep"))
        throw ParseError("ensemble spec needs \"builder\" and \"sweep\"");
    EnsembleSpec spec;
    spec.builder = builder_from_json(j["builder"]);
    try {
        if (j.contains("n_samples")) spec.n_samples = j["n_samples"].get<int>();
        if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("psi")) spec.psi_index = j["psi"].get<int>();
        const Json& sweep = j["sweep"];
        if (sweep.contains("param")) spec.sweep.param = sweep["param"].get<std::string>();
        if (!sweep.contains("values") || !sweep["values"].is_array())
            throw ParseError("sweep needs a \"values\" array");
        for (const auto& v : sweep["values"])
            spec.sweep.values.push_back(v.get<double>());
        if (j.contains("horizons"))
            for (const auto& h : j["horizons"])
                spec.horizons.push_back(h.get<long>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("ensemble spec: ") + e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// analysis results

inline Json analysis_to_json(const ReturnAnalysis& a) {
    Json j;
    j["q"] = a.q;
    j["p"] = a.p;
    j["partial_T"] = a.partial_T;
    if (std::isinf(a.exact_T))
        j["exact_T"] = "inf";
    else
        j["exact_T"] = a.exact_T;
    j["recurrent"] = a.recurrent;
    j["relevant_dim"] = a.relevant_dim;
    j["psi_unital"] = a.psi_unital;
    j["method"] =
        a.method == ReturnAnalysis::Method::Spectral ? "spectral" : "summation";
    return j;
}

inline ReturnAnalysis analysis_from_json(const Json& j) {
    ReturnAnalysis a;
    try {
        a.q = j.at("q").get<std::vector<double>>();
        a.p = j.at("p").get<std::vector<double>>();
        a.partial_T = j.at("partial_T").get<std::vector<double>>();
        if (j.at("exact_T").is_string()) {
            if (j.at("exact_T").get<std::string>() != "inf")
                throw ParseError("exact_T must be a number or \"inf\"");
            a.exact_T = std::numeric_limits<double>::infinity();
        } else {
            a.exact_T = j.at("exact_T").get<double>();
        }
        a.recurrent = j.at("recurrent").get<bool>();
        a.relevant_dim = j.at("relevant_dim").get<int>();
        a.psi_unital = j.at("psi_unital").get<bool>();
        const std::string method = j.at("method").get<std::string>();
        if (method == "spectral")
            a.method = ReturnAnalysis::Method::Spectral;
        else if (method == "summation")
            a.method = ReturnAnalysis::Method::Summation;
        else
            throw ParseError("unknown method \"" + method + "\"");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("analysis: ") + e.what());
    }
    return a;
}

inline Json validation_to_json(const ValidationReport& r) {
    Json j;
    j["trace_preserving"] = r.trace_preserving;
    j["completely_positive"] = r.completely_positive;
    j["unital_global"] = r.unital_global;
    j["max_normalization_defect"] = r.max_normalization_defect;
    j["max_unitality_defect"] = r.max_unitality_defect;
    return j;
}

// ---------------------------------------------------------------------------
// CSV emission

/// Rows t = 1..L of the first-return distribution.
inline void write_distribution_csv(std::ostream& os, const ReturnAnalysis& a) {
    os << "t,p,q\n";
    for (size_t t = 1; t < a.q.size(); ++t)
        os << t << ',' << format_double(a.p[t - 1]) << ','
           << format_double(a.q[t]) << '\n';
}

/// One row per (grid value, horizon); L = "inf" marks the exact time.
inline void write_stats_csv(std::ostream& os, const EnsembleStats& stats) {
    os << stats.param << ",L,lower,median,upper,mean,count_infinite\n";
    for (size_t g = 0; g < stats.grid.size(); ++g) {
        auto row = [&](const std::string& label, const Band& band) {
            os << format_double(stats.grid[g]) << ',' << label << ','
               << format_double(band.lower_decile) << ','
               << format_double(band.median) << ','
               << format_double(band.upper_decile) << ','
               << format_double(band.mean) << ',' << band.count_infinite << '\n';
        };
        for (size_t h = 0; h < stats.horizons.size(); ++h)
            row(std::to_string(stats.horizons[h]), stats.partial[h][g]);
        row("inf", stats.exact[g]);
    }
}

/// Long-form per-sample values for external plotting.
inline void write_raw_csv(std::ostream& os, const EnsembleStats& stats) {
    os << stats.param << ",L,sample,T\n";
    for (size_t g = 0; g < stats.grid.size(); ++g) {
        for (size_t h = 0; h < stats.horizons.size(); ++h)
            for (size_t k = 0; k < stats.raw_partial[h][g].size(); ++k)
                os << format_double(stats.grid[g]) << ','
                   << stats.horizons[h] << ',' << k << ','
                   << format_double(stats.raw_partial[h][g][k]) << '\n';
        for (size_t k = 0; k < stats.raw_exact[g].size(); ++k)
            os << format_double(stats.grid[g]) << ",inf," << k << ','
               << format_double(stats.raw_exact[g][k]) << '\n';
    }
}

} // namespace qreturn
