#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "taufn/loops.hpp"

namespace taufn {

// Parsed, validated scenario configuration.  Parsing is strict: unknown
// keys anywhere in the tree are rejected before any computation starts.
struct Scenario {
    std::string name;

    // initial point
    int n = 1;
    std::string preset;            // "identity" | "one_pole" | "exp_of" | "" (literal)
    cplx pole_c = cplx(0.0, 0.0);  // one_pole strength
    cplx pole_a = cplx(0.0, 0.0);  // one_pole location
    int pole_depth = 0;
    BlockLoop literal;             // literal loop or exp_of exponent

    // flows
    bool has_flows = false;
    std::string family;            // "kp" | "principal_A" | "homogeneous_A"
    std::map<int, double> times;

    // lattice sweep (optional)
    bool has_lattice = false;
    std::vector<int> lattice_axes;
    int lattice_half_width = 0;
    double lattice_step = 0.0;

    // numerics
    int grid_m = 256;
    int truncation = 24;       // P
    int m_h = 24;
    std::vector<int> schedule = {8, 16, 32, 64};
    double fd_step = 1e-4;
    double tail_tol = 1e-14;
    std::map<std::string, double> tolerances;

    // outputs
    std::string csv_name;
    std::string report_name = "report.json";

    // Builds the point symbol as a plain loop (no Grassmann validation).
    BlockLoop point_loop() const {
        if (preset == "identity") return preset_identity(n);
        if (preset == "one_pole") return preset_one_pole(pole_c, pole_a, pole_depth);
        if (preset == "exp_of") return preset_exp_of(literal, tail_tol);
        return literal;
    }
};

namespace detail {

using json = nlohmann::json;

inline void require_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& [key, val] : obj.items()) {
        (void)val;
        if (!allowed.count(key))
            throw SchemaError(where + ": unknown key '" + key + "'");
    }
}

inline cplx parse_complex(const json& v, const std::string& where) {
    if (v.is_number()) return cplx(v.get<double>(), 0.0);
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return cplx(v[0].get<double>(), v[1].get<double>());
    throw SchemaError(where + ": expected a number or [re, im]");
}

inline Mat parse_real_matrix(const json& v, int n, const std::string& where) {
    if (!v.is_array() || static_cast<int>(v.size()) != n)
        throw SchemaError(where + ": expected an " + std::to_string(n) + "-row matrix");
    Mat m = Mat::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const json& row = v[static_cast<size_t>(i)];
        if (!row.is_array() || static_cast<int>(row.size()) != n)
            throw SchemaError(where + ": row " + std::to_string(i) + " has wrong length");
        for (int jj = 0; jj < n; ++jj) {
            if (!row[static_cast<size_t>(jj)].is_number())
                throw SchemaError(where + ": matrix entries must be numbers");
            m(i, jj) = row[static_cast<size_t>(jj)].get<double>();
        }
    }
    return m;
}

inline BlockLoop parse_loop_literal(const json& v, int n, const std::string& where) {
    if (!v.is_array() || v.empty())
        throw SchemaError(where + ": expected a nonempty list of {k, re, im} records");
    std::vector<std::pair<int, Mat>> entries;
    for (size_t i = 0; i < v.size(); ++i) {
        const json& rec = v[i];
        require_keys(rec, {"k", "re", "im"}, where + "[" + std::to_string(i) + "]");
        if (!rec.contains("k") || !rec["k"].is_number_integer())
            throw SchemaError(where + ": each record needs an integer 'k'");
        if (!rec.contains("re"))
            throw SchemaError(where + ": each record needs an 're' matrix");
        Mat re = parse_real_matrix(rec["re"], n, where + ".re");
        Mat im = rec.contains("im") ? parse_real_matrix(rec["im"], n, where + ".im")
                                    : Mat::Zero(n, n).eval();
        entries.emplace_back(rec["k"].get<int>(), re + cplx(0.0, 1.0) * im);
    }
    return BlockLoop::from_coeffs(n, entries);
}

inline std::map<int, double> parse_times(const json& v, const std::string& where) {
    if (!v.is_object()) throw SchemaError(where + ": expected an object of index -> time");
    std::map<int, double> t;
    for (const auto& [key, val] : v.items()) {
        int idx = 0;
        try {
            size_t pos = 0;
            idx = std::stoi(key, &pos);
            if (pos != key.size()) throw std::invalid_argument(key);
        } catch (const std::exception&) {
            throw SchemaError(where + ": key '" + key + "' is not an integer index");
        }
        if (idx < 1) throw SchemaError(where + ": flow indices must be >= 1");
        if (!val.is_number()) throw SchemaError(where + ": time values must be numbers");
        t[idx] = val.get<double>();
    }
    return t;
}

} // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    detail::json root;
    try {
        root = detail::json::parse(text);
    } catch (const std::exception& e) {
        throw SchemaError(std::string("scenario: invalid JSON: ") + e.what());
    }
    detail::require_keys(root, {"name", "point", "flows", "numerics", "outputs"}, "scenario");
    Scenario sc;
    if (root.contains("name")) {
        if (!root["name"].is_string()) throw SchemaError("scenario.name: expected a string");
        sc.name = root["name"].get<std::string>();
    }

    if (!root.contains("point")) throw SchemaError("scenario: missing 'point'");
    const detail::json& pt = root["point"];
    detail::require_keys(pt, {"n", "preset", "c", "pole", "depth", "exponent", "literal"},
                         "scenario.point");
    if (!pt.contains("n") || !pt["n"].is_number_integer() || pt["n"].get<int>() < 1)
        throw SchemaError("scenario.point: 'n' must be a positive integer");
    sc.n = pt["n"].get<int>();
    bool has_preset = pt.contains("preset"), has_literal = pt.contains("literal");
    if (has_preset == has_literal)
        throw SchemaError("scenario.point: exactly one of 'preset' or 'literal' is required");
    if (has_preset) {
        if (!pt["preset"].is_string()) throw SchemaError("scenario.point.preset: expected a string");
        sc.preset = pt["preset"].get<std::string>();
        if (sc.preset == "identity") {
            for (const char* k : {"c", "pole", "depth", "exponent"})
                if (pt.contains(k))
                    throw SchemaError(std::string("scenario.point: '") + k
                                      + "' is not a parameter of preset identity");
        } else if (sc.preset == "one_pole") {
            if (sc.n != 1) throw SchemaError("scenario.point: one_pole requires n = 1");
            if (!pt.contains("c")) throw SchemaError("scenario.point: one_pole needs 'c'");
            sc.pole_c = detail::parse_complex(pt["c"], "scenario.point.c");
            if (pt.contains("pole"))
                sc.pole_a = detail::parse_complex(pt["pole"], "scenario.point.pole");
            if (pt.contains("depth")) {
                if (!pt["depth"].is_number_integer())
                    throw SchemaError("scenario.point.depth: expected an integer");
                sc.pole_depth = pt["depth"].get<int>();
            }
            if (pt.contains("exponent"))
                throw SchemaError("scenario.point: 'exponent' is not a one_pole parameter");
        } else if (sc.preset == "exp_of") {
            if (!pt.contains("exponent"))
                throw SchemaError("scenario.point: exp_of needs an 'exponent' loop literal");
            sc.literal = detail::parse_loop_literal(pt["exponent"], sc.n, "scenario.point.exponent");
            for (const char* k : {"c", "pole", "depth"})
                if (pt.contains(k))
                    throw SchemaError(std::string("scenario.point: '") + k
                                      + "' is not an exp_of parameter");
        } else {
            throw SchemaError("scenario.point.preset: unknown preset '" + sc.preset + "'");
        }
    } else {
        sc.literal = detail::parse_loop_literal(pt["literal"], sc.n, "scenario.point.literal");
    }

    if (root.contains("flows")) {
        sc.has_flows = true;
        const detail::json& fl = root["flows"];
        detail::require_keys(fl, {"family", "n", "times", "lattice"}, "scenario.flows");
        if (!fl.contains("family") || !fl["family"].is_string())
            throw SchemaError("scenario.flows: 'family' string is required");
        sc.family = fl["family"].get<std::string>();
        if (sc.family != "kp" && sc.family != "principal_A" && sc.family != "homogeneous_A")
            throw SchemaError("scenario.flows.family: unknown family '" + sc.family + "'");
        if (fl.contains("n")) {
            if (!fl["n"].is_number_integer() || fl["n"].get<int>() != sc.n)
                throw SchemaError("scenario.flows: 'n' must match scenario.point.n");
        }
        if (!fl.contains("times")) throw SchemaError("scenario.flows: 'times' is required");
        sc.times = detail::parse_times(fl["times"], "scenario.flows.times");
        if (fl.contains("lattice")) {
            sc.has_lattice = true;
            const detail::json& lat = fl["lattice"];
            detail::require_keys(lat, {"axes", "half_width", "step"}, "scenario.flows.lattice");
            if (!lat.contains("axes") || !lat["axes"].is_array() || lat["axes"].empty())
                throw SchemaError("scenario.flows.lattice: 'axes' list is required");
            for (const auto& a : lat["axes"]) {
                if (!a.is_number_integer() || a.get<int>() < 1)
                    throw SchemaError("scenario.flows.lattice.axes: indices must be >= 1");
                sc.lattice_axes.push_back(a.get<int>());
            }
            if (!lat.contains("half_width") || !lat["half_width"].is_number_integer()
                || lat["half_width"].get<int>() < 1)
                throw SchemaError("scenario.flows.lattice: positive integer 'half_width' required");
            sc.lattice_half_width = lat["half_width"].get<int>();
            if (!lat.contains("step") || !lat["step"].is_number()
                || lat["step"].get<double>() <= 0.0)
                throw SchemaError("scenario.flows.lattice: positive 'step' required");
            sc.lattice_step = lat["step"].get<double>();
        }
    }

    if (root.contains("numerics")) {
        const detail::json& nm = root["numerics"];
        detail::require_keys(nm, {"M", "P", "M_H", "N_schedule", "fd_step", "tail_tol",
                                  "tolerances"},
                             "scenario.numerics");
        auto pos_int = [&](const char* key, int& slot) {
            if (!nm.contains(key)) return;
            if (!nm[key].is_number_integer() || nm[key].get<int>() < 1)
                throw SchemaError(std::string("scenario.numerics.") + key
                                  + ": expected a positive integer");
            slot = nm[key].get<int>();
        };
        pos_int("M", sc.grid_m);
        pos_int("P", sc.truncation);
        pos_int("M_H", sc.m_h);
        if (nm.contains("N_schedule")) {
            if (!nm["N_schedule"].is_array() || nm["N_schedule"].empty())
                throw SchemaError("scenario.numerics.N_schedule: expected a nonempty list");
            sc.schedule.clear();
            int last = -1;
            for (const auto& v : nm["N_schedule"]) {
                if (!v.is_number_integer() || v.get<int>() < 0)
                    throw SchemaError("scenario.numerics.N_schedule: entries must be >= 0");
                int nv = v.get<int>();
                if (nv <= last)
                    throw SchemaError("scenario.numerics.N_schedule: must increase strictly");
                sc.schedule.push_back(nv);
                last = nv;
            }
        }
        auto pos_real = [&](const char* key, double& slot) {
            if (!nm.contains(key)) return;
            if (!nm[key].is_number() || nm[key].get<double>() <= 0.0)
                throw SchemaError(std::string("scenario.numerics.") + key
                                  + ": expected a positive number");
            slot = nm[key].get<double>();
        };
        pos_real("fd_step", sc.fd_step);
        pos_real("tail_tol", sc.tail_tol);
        if (nm.contains("tolerances")) {
            if (!nm["tolerances"].is_object())
                throw SchemaError("scenario.numerics.tolerances: expected an object");
            for (const auto& [key, val] : nm["tolerances"].items()) {
                if (!val.is_number() || val.get<double>() <= 0.0)
                    throw SchemaError("scenario.numerics.tolerances: values must be positive");
                sc.tolerances[key] = val.get<double>();
            }
        }
    }

    if (root.contains("outputs")) {
        const detail::json& out = root["outputs"];
        detail::require_keys(out, {"csv", "report"}, "scenario.outputs");
        if (out.contains("csv")) {
            if (!out["csv"].is_string()) throw SchemaError("scenario.outputs.csv: expected a string");
            sc.csv_name = out["csv"].get<std::string>();
        }
        if (out.contains("report")) {
            if (!out["report"].is_string())
                throw SchemaError("scenario.outputs.report: expected a string");
            sc.report_name = out["report"].get<std::string>();
        }
    }
    return sc;
}

} // namespace taufn
