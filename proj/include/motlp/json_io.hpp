#pragma once

// Measure JSON representation {"dim": d, "atoms": [{"x": [...], "w": w}]}.
// Written by hand so every double carries 17 significant digits; parsed with
// nlohmann::json.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "motlp/errors.hpp"
#include "motlp/measures.hpp"

namespace motlp {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string write_measure_json(const DiscreteMeasure& m) {
    std::ostringstream os;
    os << "{\"dim\": " << m.dim << ", \"atoms\": [";
    for (std::size_t i = 0; i < m.atoms.size(); ++i) {
        const auto& a = m.atoms[i];
        if (i) os << ", ";
        os << "{\"x\": [";
        for (int k = 0; k < m.dim; ++k) os << (k ? ", " : "") << fmt_double(a.x[k]);
        os << "], \"w\": " << fmt_double(a.w) << "}";
    }
    os << "]}";
    return os.str();
}

inline DiscreteMeasure parse_measure_json(const nlohmann::json& j) {
    if (!j.contains("dim") || !j.contains("atoms"))
        raise(ErrorCode::IOFailure, "measure JSON needs dim and atoms");
    int dim = j["dim"].get<int>();
    std::vector<Atom> atoms;
    for (const auto& ja : j["atoms"]) {
        Atom a;
        a.x = ja["x"].get<std::vector<double>>();
        a.w = ja["w"].get<double>();
        atoms.push_back(std::move(a));
    }
    return normalize_merge(dim, std::move(atoms));
}

inline DiscreteMeasure read_measure_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    return parse_measure_json(j);
}

inline DiscreteMeasure read_measure_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) raise(ErrorCode::IOFailure, "cannot open " + path);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        raise(ErrorCode::IOFailure, std::string("bad JSON in ") + path + ": " + e.what());
    }
    return parse_measure_json(j);
}

inline void write_measure_file(const DiscreteMeasure& m, const std::string& path) {
    std::ofstream os(path);
    if (!os) raise(ErrorCode::IOFailure, "cannot open " + path);
    os << write_measure_json(m) << "\n";
    if (!os.good()) raise(ErrorCode::IOFailure, "write failed for " + path);
}

} // namespace motlp
