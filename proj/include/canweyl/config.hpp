#pragma once

// JSON run configuration: model specification (hamiltonian / string /
// sturm-liouville problem / measure), solver parameters and sweep grid.
// Unknown keys are rejected with the offending key path; parse failures
// report line and column.  The schema is documented in the README.

#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "canweyl/corpus.hpp"
#include "canweyl/errors.hpp"
#include "canweyl/estimator.hpp"
#include "canweyl/spectral.hpp"
#include "canweyl/strings.hpp"
#include "canweyl/sweep.hpp"

namespace canweyl {

using json = nlohmann::json;

struct RunConfig {
    std::string command;
    double q = 0.2;
    double eps = 1e-8;
    SweepGrid grid;
    std::vector<double> angles{M_PI / 4, M_PI / 2, 3 * M_PI / 4};
    std::string out;
    std::string format = "csv";
    std::optional<Hamiltonian> hamiltonian;
    std::optional<KreinString> string;
    std::optional<SLProblem> sl;
    std::optional<SyntheticMeasure> measure;
    std::optional<RegVarFunction> weight;
    json raw;
};

namespace detail_config {

inline void check_keys(const json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
    if (!j.is_object()) throw SchemaError("expected an object at " + where, where);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw SchemaError("unknown key '" + it.key() + "' in " + where, it.key());
}

inline double num(const json& j, const std::string& key, double dflt) {
    if (!j.contains(key)) return dflt;
    if (j[key].is_null()) return dflt;
    if (!j[key].is_number()) throw SchemaError("key '" + key + "' must be a number", key);
    return j[key].get<double>();
}

inline Mat2 mat(const json& j, const std::string& key) {
    const auto& m = j;
    if (!m.is_array() || m.size() != 2 || !m[0].is_array() || m[0].size() != 2 ||
        m[1].size() != 2)
        throw SchemaError("matrix must be [[a,c],[c,b]] at '" + key + "'", key);
    Mat2 out{m[0][0].get<double>(), m[0][1].get<double>(), m[1][0].get<double>(),
             m[1][1].get<double>()};
    if (std::abs(out.m12 - out.m21) > 1e-14 * (1.0 + std::abs(out.m12)))
        throw SchemaError("matrix must be symmetric at '" + key + "'", key);
    return out;
}

inline std::vector<Hamiltonian::PowerTerm> power_terms(const json& j, const std::string& key) {
    std::vector<Hamiltonian::PowerTerm> out;
    if (!j.is_array()) throw SchemaError("'" + key + "' must be a list of [coef, expo]", key);
    for (const auto& t : j) {
        if (!t.is_array() || t.size() != 2)
            throw SchemaError("'" + key + "' entries must be [coef, expo]", key);
        out.push_back({t[0].get<double>(), t[1].get<double>()});
    }
    return out;
}

inline Hamiltonian parse_hamiltonian(const json& j) {
    check_keys(j, {"type", "name", "phi", "alpha", "h1", "h2", "h", "a", "b", "cuts",
                   "values", "m1", "m2", "m3"},
               "hamiltonian");
    const std::string type = j.value("type", "");
    if (type == "identity") return corpus::identity();
    if (type == "diag") return corpus::diag_const(num(j, "h1", 1.0), num(j, "h2", 1.0));
    if (type == "constant") return Hamiltonian::constant(mat(j.at("h"), "h"));
    if (type == "corpus")
        return corpus::by_name(j.value("name", ""), num(j, "phi", M_PI / 4),
                               num(j, "alpha", 2.0));
    if (type == "piecewise") {
        std::vector<double> cuts;
        for (const auto& c : j.value("cuts", json::array())) cuts.push_back(c.get<double>());
        std::vector<Mat2> values;
        if (!j.contains("values")) throw SchemaError("piecewise needs 'values'", "values");
        for (const auto& v : j["values"]) values.push_back(mat(v, "values"));
        const double a = num(j, "a", 0.0);
        const double b = j.contains("b") && !j["b"].is_null() ? j["b"].get<double>() : inf;
        return Hamiltonian::piecewise_constant(a, cuts, values, b);
    }
    if (type == "power") {
        const double a = num(j, "a", 0.0);
        const double b = j.contains("b") && !j["b"].is_null() ? j["b"].get<double>() : inf;
        return Hamiltonian::power_primitive(
            a, power_terms(j.value("m1", json::array()), "m1"),
            power_terms(j.value("m2", json::array()), "m2"),
            power_terms(j.value("m3", json::array()), "m3"), b);
    }
    throw SchemaError("unknown hamiltonian type '" + type + "'", "type");
}

inline KreinString parse_string(const json& j) {
    check_keys(j, {"length", "mass"}, "string");
    const double L = j.contains("length") && !j["length"].is_null()
                         ? j["length"].get<double>()
                         : inf;
    if (!j.contains("mass")) throw SchemaError("string needs 'mass'", "mass");
    const json& m = j["mass"];
    check_keys(m, {"type", "coef", "expo", "segments"}, "string.mass");
    const std::string type = m.value("type", "");
    KreinString s;
    s.length = L;
    if (type == "power") {
        const double c = num(m, "coef", 1.0), e = num(m, "expo", 1.0);
        if (!(c > 0.0 && e > 0.0)) throw SchemaError("mass power needs coef, expo > 0", "mass");
        s.mass = MonotoneFunction::from_callable(
            0.0, L, [c, e](double x) { return c * std::pow(x, e); },
            std::isfinite(L) ? c * std::pow(L, e) : inf);
        return s;
    }
    if (type == "pieces") {
        std::vector<MonotoneFunction::Segment> segs;
        for (const auto& seg : m.value("segments", json::array())) {
            if (!seg.is_array() || seg.size() != 3)
                throw SchemaError("mass segments must be [x, value, slope]", "segments");
            segs.push_back({seg[0].get<double>(), seg[1].get<double>(), seg[2].get<double>()});
        }
        s.mass = MonotoneFunction::piecewise(0.0, L, 0.0, segs);
        return s;
    }
    throw SchemaError("unknown mass type '" + type + "'", "mass");
}

inline std::function<double(double)> parse_coefficient(const json& j, const std::string& key) {
    if (j.is_null()) return nullptr;
    if (j.is_number()) {
        const double v = j.get<double>();
        return [v](double) { return v; };
    }
    check_keys(j, {"type", "coef", "expo", "height", "lo", "hi"}, key);
    const std::string type = j.value("type", "");
    if (type == "constant") {
        const double v = num(j, "coef", 1.0);
        return [v](double) { return v; };
    }
    if (type == "power") {
        const double c = num(j, "coef", 1.0), e = num(j, "expo", 1.0);
        return [c, e](double x) { return c * std::pow(x, e); };
    }
    if (type == "bump") {
        const double hgt = num(j, "height", 1.0), lo = num(j, "lo", 1.0), hi = num(j, "hi", 2.0);
        return [hgt, lo, hi](double x) { return (x >= lo && x <= hi) ? hgt : 0.0; };
    }
    throw SchemaError("unknown coefficient type '" + type + "' in " + key, key);
}

inline SLProblem parse_sl(const json& j) {
    check_keys(j, {"a", "b", "p", "q", "w", "lambda0"}, "sl");
    SLProblem prob;
    prob.iv = {num(j, "a", 0.0),
               j.contains("b") && !j["b"].is_null() ? j["b"].get<double>() : inf};
    prob.p = [](double) { return 1.0; };
    prob.w = [](double) { return 1.0; };
    if (j.contains("p") && !j["p"].is_null()) prob.p = parse_coefficient(j["p"], "sl.p");
    if (j.contains("w") && !j["w"].is_null()) prob.w = parse_coefficient(j["w"], "sl.w");
    if (j.contains("q") && !j["q"].is_null()) prob.q = parse_coefficient(j["q"], "sl.q");
    if (j.contains("lambda0") && !j["lambda0"].is_null())
        prob.lambda0 = j["lambda0"].get<double>();
    return prob;
}

inline SyntheticMeasure parse_measure(const json& j) {
    check_keys(j, {"atoms", "pieces", "symmetric"}, "measure");
    SyntheticMeasure m;
    for (const auto& a : j.value("atoms", json::array())) {
        if (!a.is_array() || a.size() != 2)
            throw SchemaError("measure atoms must be [location, mass]", "atoms");
        m.atoms.push_back({a[0].get<double>(), a[1].get<double>()});
    }
    for (const auto& p : j.value("pieces", json::array())) {
        check_keys(p, {"lo", "hi", "density"}, "measure.pieces");
        SyntheticMeasure::DensityPiece piece;
        piece.lo = p.contains("lo") && !p["lo"].is_null() ? p["lo"].get<double>() : -inf;
        piece.hi = p.contains("hi") && !p["hi"].is_null() ? p["hi"].get<double>() : inf;
        for (const auto& d : p.value("density", json::array())) {
            if (!d.is_array() || d.size() != 2)
                throw SchemaError("density entries must be [coef, expo]", "density");
            piece.density.push_back({d[0].get<double>(), d[1].get<double>()});
        }
        m.pieces.push_back(piece);
    }
    m.symmetric = j.value("symmetric", false);
    m.validate();
    return m;
}

inline RegVarFunction parse_weight(const json& j) {
    check_keys(j, {"type", "coef", "expo"}, "weight");
    const std::string type = j.value("type", "power");
    if (type == "power") return RegVarFunction::power_fn(num(j, "coef", 1.0), num(j, "expo", 1.0));
    throw SchemaError("unknown weight type '" + type + "'", "weight");
}

}  // namespace detail_config

inline RunConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // translate the byte offset into line / column
        int line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(e.what(), line, col);
    }
    detail_config::check_keys(j,
                              {"command", "q", "eps", "grid", "angles", "out", "format",
                               "hamiltonian", "string", "sl", "measure", "weight"},
                              "config");
    RunConfig cfg;
    cfg.raw = j;
    cfg.command = j.value("command", "");
    cfg.q = detail_config::num(j, "q", 0.2);
    if (!(cfg.q > 0.0 && cfg.q < q_upper_limit))
        throw SchemaError("q must lie in (0, 1 - 1/sqrt 2)", "q");
    cfg.eps = detail_config::num(j, "eps", 1e-8);
    if (!(cfg.eps > 0.0)) throw SchemaError("eps must be positive", "eps");
    if (j.contains("grid")) {
        detail_config::check_keys(j["grid"], {"min", "max", "points"}, "grid");
        cfg.grid.r_min = detail_config::num(j["grid"], "min", 1.0);
        cfg.grid.r_max = detail_config::num(j["grid"], "max", 1e5);
        cfg.grid.points = (int)detail_config::num(j["grid"], "points", 12);
        if (!(cfg.grid.r_min > 0.0) || !(cfg.grid.r_max > cfg.grid.r_min) || cfg.grid.points < 1)
            throw SchemaError("grid must satisfy 0 < min < max, points >= 1", "grid");
    }
    if (j.contains("angles")) {
        cfg.angles.clear();
        for (const auto& a : j["angles"]) {
            const double th = a.get<double>();
            if (!(th > 0.0 && th < M_PI)) throw SchemaError("angles must lie in (0, pi)", "angles");
            cfg.angles.push_back(th);
        }
        if (cfg.angles.empty()) throw SchemaError("angles must not be empty", "angles");
    }
    cfg.out = j.value("out", "");
    cfg.format = j.value("format", "csv");
    if (cfg.format != "csv" && cfg.format != "json")
        throw SchemaError("format must be 'csv' or 'json'", "format");
    if (j.contains("hamiltonian")) cfg.hamiltonian = detail_config::parse_hamiltonian(j["hamiltonian"]);
    if (j.contains("string")) cfg.string = detail_config::parse_string(j["string"]);
    if (j.contains("sl")) cfg.sl = detail_config::parse_sl(j["sl"]);
    if (j.contains("measure")) cfg.measure = detail_config::parse_measure(j["measure"]);
    if (j.contains("weight")) cfg.weight = detail_config::parse_weight(j["weight"]);
    return cfg;
}

/// Canonical re-serialisation of a parsed config (defaults filled in).
inline json normalized_config(const RunConfig& cfg) {
    json j;
    if (!cfg.command.empty()) j["command"] = cfg.command;
    j["q"] = cfg.q;
    j["eps"] = cfg.eps;
    j["grid"] = {{"min", cfg.grid.r_min}, {"max", cfg.grid.r_max}, {"points", cfg.grid.points}};
    j["angles"] = cfg.angles;
    if (!cfg.out.empty()) j["out"] = cfg.out;
    j["format"] = cfg.format;
    for (const char* key : {"hamiltonian", "string", "sl", "measure", "weight"})
        if (cfg.raw.contains(key)) j[key] = cfg.raw[key];
    return j;
}

}  // namespace canweyl
