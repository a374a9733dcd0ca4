#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "taufn/kacmoody.hpp"
#include "taufn/scenario.hpp"
#include "taufn/version.hpp"

namespace taufn {

inline std::string format_sig17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

inline std::string fnv1a_digest(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string("fnv1a64:") + buf;
}

// Command output: CSV table (may be empty), JSON report, process exit code.
struct RunResult {
    std::string csv;
    nlohmann::ordered_json report;
    int exit_code = 0;
};

namespace detail {

class StageClock {
public:
    void start(const std::string& stage) {
        stage_ = stage;
        t0_ = std::chrono::steady_clock::now();
    }
    void stop(nlohmann::ordered_json& timings) {
        auto dt = std::chrono::steady_clock::now() - t0_;
        timings[stage_] =
            std::chrono::duration_cast<std::chrono::microseconds>(dt).count() / 1000.0;
    }

private:
    std::string stage_;
    std::chrono::steady_clock::time_point t0_;
};

inline nlohmann::ordered_json complex_json(cplx v) {
    return nlohmann::ordered_json::array({v.real(), v.imag()});
}

} // namespace detail

inline nlohmann::ordered_json report_skeleton(const Scenario& sc, const std::string& digest,
                                              const std::string& command) {
    nlohmann::ordered_json rep;
    rep["version"] = version_string;
    rep["command"] = command;
    rep["scenario"] = sc.name;
    rep["scenario_digest"] = digest;
    rep["results"] = nlohmann::ordered_json::object();
    rep["residuals"] = nlohmann::ordered_json::object();
    rep["notes"] = nlohmann::ordered_json::array();
    rep["timings_ms"] = nlohmann::ordered_json::object();
    rep["exit_status"] = 0;
    return rep;
}

inline GrassmannPoint scenario_point(const Scenario& sc) {
    return GrassmannPoint(sc.point_loop(), sc.name);
}

inline FlowGroupElement scenario_flow(const Scenario& sc, const std::map<int, double>& times) {
    if (!sc.has_flows) throw SchemaError("scenario: this command requires a 'flows' section");
    if (sc.family == "kp") return kp_flows(sc.n, times, 0, sc.grid_m);
    if (sc.family == "principal_A") {
        if (sc.n < 2) throw SchemaError("scenario.flows: principal_A needs n >= 2");
        return principal_flows(AffineData::type_a(sc.n), times, sc.grid_m);
    }
    if (sc.n < 2) throw SchemaError("scenario.flows: homogeneous_A needs n >= 2");
    return homogeneous_flows(AffineData::type_a(sc.n), times, sc.grid_m);
}

inline NumericParams scenario_params(const Scenario& sc) {
    NumericParams p;
    p.m_h = sc.m_h;
    p.schedule = sc.schedule;
    p.tail_tol = sc.tail_tol;
    p.truncation = sc.truncation;
    p.fd_step = sc.fd_step;
    return p;
}

// ---- symbol --------------------------------------------------------------

inline RunResult cmd_symbol(const Scenario& sc, const std::string& digest) {
    RunResult out;
    out.report = report_skeleton(sc, digest, "symbol");
    detail::StageClock clock;
    clock.start("compute");
    BlockLoop sym = sc.point_loop().trimmed(0.0);
    CircleGrid grid(detail::next_pow2(std::max(sc.grid_m, 4 * sym.bandwidth() + 16)));
    auto& res = out.report["results"];
    res["n"] = sym.dim();
    res["k_min"] = sym.k_min();
    res["k_max"] = sym.k_max();
    res["sup_norm"] = sup_norm(sym, grid);
    res["l_half_norm"] = l_half_norm(sym);
    int w = winding_number(sym, grid);
    res["winding"] = w;
    if (w == 0) {
        cplx g = geometric_mean(sym, grid);
        res["geometric_mean"] = detail::complex_json(g);
        res["method"] = "grid-quadrature";
    } else {
        out.report["notes"].push_back(
            "factorization refused: determinant winding = " + std::to_string(w));
    }
    clock.stop(out.report["timings_ms"]);
    return out;
}

// ---- dn ------------------------------------------------------------------

inline RunResult cmd_dn(const Scenario& sc, const std::string& digest) {
    RunResult out;
    out.report = report_skeleton(sc, digest, "dn");
    detail::StageClock clock;
    clock.start("compute");
    BlockLoop sym = sc.has_flows
                        ? jump(scenario_point(sc), scenario_flow(sc, sc.times), sc.tail_tol)
                        : sc.point_loop().trimmed(0.0);
    CircleGrid grid(detail::next_pow2(std::max(sc.grid_m, 4 * sym.bandwidth() + 16)));
    cplx log_g = geometric_mean_log(sym, grid);
    std::ostringstream csv;
    csv << "N,re_logDN,im_logDN,re_normalized,im_normalized\n";
    int sentinels = 0;
    for (int n_trunc : sc.schedule) {
        cplx d = log_det_DN(sym, n_trunc);
        csv << n_trunc << ',';
        if (is_log_det_sentinel(d)) {
            ++sentinels;
            csv << "-inf,nan,nan,nan\n";
            continue;
        }
        // Normalized column uses the same principal-strip branch as the limit
        // routine; the raw columns keep the LU branch untouched.
        cplx norm = d - static_cast<double>(n_trunc + 1) * log_g;
        double norm_im = std::remainder(norm.imag(), 2.0 * std::numbers::pi);
        csv << format_sig17(d.real()) << ',' << format_sig17(d.imag()) << ','
            << format_sig17(norm.real()) << ',' << format_sig17(norm_im) << '\n';
    }
    out.csv = csv.str();
    auto& res = out.report["results"];
    res["log_geometric_mean"] = detail::complex_json(log_g);
    res["method"] = "finite-section-LU";
    res["rows"] = static_cast<int>(sc.schedule.size());
    res["singular_rows"] = sentinels;
    clock.stop(out.report["timings_ms"]);
    return out;
}

// ---- tau -----------------------------------------------------------------

namespace detail {

struct TauRow {
    std::map<int, double> t;
    bool big_cell = true;
    cplx log_tau = cplx(0.0, 0.0);
    std::map<int, cplx> sato, jmu;
    std::string failure;  // nonempty on a non-big-cell numerical failure
};

inline TauRow tau_row(const GrassmannPoint& pt, const Scenario& sc,
                      const std::map<int, double>& t) {
    TauRow row;
    row.t = t;
    NumericParams params = scenario_params(sc);
    FlowGroupElement flow = scenario_flow(sc, t);
    TauEvaluation ev = tau_ssw(pt, flow, params);
    if (!ev.big_cell) {
        row.big_cell = false;
        return row;
    }
    row.log_tau = ev.log_value;
    try {
        BakerFunction bf = baker_function(pt, flow, params);
        CircleGrid grid(detail::next_pow2(std::max(
            sc.grid_m, CircleGrid::for_bandwidth(bf.jump_symbol.bandwidth() + 2).size())));
        for (const auto& [j, v] : t) {
            (void)v;
            row.sato[j] = generalized_sato_logderiv(bf, flow.generator(j));
            BlockLoop dj = scale(flow.generator(j) * bf.jump_symbol, -1.0);
            row.jmu[j] = malgrange_jmu_logderiv(bf.rh, bf.jump_symbol, dj, grid);
        }
    } catch (const Error& e) {
        row.failure = e.what();
    }
    return row;
}

} // namespace detail

inline RunResult cmd_tau(const Scenario& sc, const std::string& digest, int jobs = 1) {
    RunResult out;
    out.report = report_skeleton(sc, digest, "tau");
    detail::StageClock clock;
    clock.start("compute");
    GrassmannPoint pt = scenario_point(sc);

    std::vector<std::map<int, double>> points;
    std::vector<int> axes = sc.lattice_axes;
    if (sc.has_lattice) {
        int side = 2 * sc.lattice_half_width + 1;
        size_t total = 1;
        for (size_t a = 0; a < axes.size(); ++a) total *= static_cast<size_t>(side);
        points.resize(total);
        for (size_t idx = 0; idx < total; ++idx) {
            std::map<int, double> t = sc.times;
            size_t rem = idx;
            for (size_t a = axes.size(); a-- > 0;) {
                int offset = static_cast<int>(rem % static_cast<size_t>(side))
                             - sc.lattice_half_width;
                rem /= static_cast<size_t>(side);
                int axis = axes[a];
                t[axis] = (sc.times.count(axis) ? sc.times.at(axis) : 0.0)
                          + offset * sc.lattice_step;
            }
            points[idx] = t;
        }
    } else {
        points.push_back(sc.times);
    }

    std::vector<detail::TauRow> rows(points.size());
    parallel_for(points.size(), jobs,
                 [&](size_t i) { rows[i] = detail::tau_row(pt, sc, points[i]); });

    for (const auto& row : rows) {
        if (!row.failure.empty()) {
            out.report["exit_status"] = 3;
            out.report["notes"].push_back("stage tau-derivatives failed: " + row.failure);
            out.exit_code = 3;
            clock.stop(out.report["timings_ms"]);
            return out;
        }
    }

    std::vector<int> t_cols;
    for (const auto& [j, v] : sc.times) {
        (void)v;
        t_cols.push_back(j);
    }
    for (int a : axes)
        if (std::find(t_cols.begin(), t_cols.end(), a) == t_cols.end()) t_cols.push_back(a);
    std::sort(t_cols.begin(), t_cols.end());

    std::ostringstream csv;
    csv << "idx";
    for (int j : t_cols) csv << ",t" << j;
    csv << ",big_cell,re_logtau,im_logtau";
    for (int j : t_cols)
        csv << ",re_sato_t" << j << ",im_sato_t" << j << ",re_jmu_t" << j << ",im_jmu_t" << j
            << ",residual_t" << j;
    csv << '\n';
    double worst_residual = 0.0;
    int off_cell = 0;
    for (size_t i = 0; i < rows.size(); ++i) {
        const detail::TauRow& row = rows[i];
        csv << i;
        for (int j : t_cols)
            csv << ',' << format_sig17(row.t.count(j) ? row.t.at(j) : 0.0);
        if (!row.big_cell) {
            ++off_cell;
            csv << ",0,nan,nan";
            for (size_t j = 0; j < t_cols.size(); ++j) csv << ",nan,nan,nan,nan,nan";
            csv << '\n';
            continue;
        }
        csv << ",1," << format_sig17(row.log_tau.real()) << ','
            << format_sig17(row.log_tau.imag());
        for (int j : t_cols) {
            if (!row.sato.count(j)) {
                csv << ",nan,nan,nan,nan,nan";
                continue;
            }
            cplx s = row.sato.at(j), m = row.jmu.at(j);
            double resid = std::abs(s - m);
            worst_residual = std::max(worst_residual, resid);
            csv << ',' << format_sig17(s.real()) << ',' << format_sig17(s.imag()) << ','
                << format_sig17(m.real()) << ',' << format_sig17(m.imag()) << ','
                << format_sig17(resid);
        }
        csv << '\n';
    }
    out.csv = csv.str();
    auto& res = out.report["results"];
    res["points"] = static_cast<int>(rows.size());
    res["off_big_cell"] = off_cell;
    res["log_tau_method"] = "fredholm";
    res["derivative_methods"] = nlohmann::ordered_json::array({"sato-contour", "malgrange-jmu"});
    if (!rows.empty() && rows.front().big_cell)
        res["log_tau_first"] = detail::complex_json(rows.front().log_tau);
    out.report["residuals"]["max_sato_vs_jmu"] = worst_residual;
    clock.stop(out.report["timings_ms"]);
    return out;
}

// ---- rh ------------------------------------------------------------------

inline RunResult cmd_rh(const Scenario& sc, const std::string& digest) {
    RunResult out;
    out.report = report_skeleton(sc, digest, "rh");
    detail::StageClock clock;
    clock.start("compute");
    GrassmannPoint pt = scenario_point(sc);
    FlowGroupElement flow = scenario_flow(sc, sc.times);
    BlockLoop j = jump(pt, flow, sc.tail_tol);
    CircleGrid grid(detail::next_pow2(
        std::max(sc.grid_m, CircleGrid::for_bandwidth(j.bandwidth() + 2).size())));
    RHSolution sol = birkhoff_factorize(j, sc.truncation, grid);

    auto& res = out.report["results"];
    res["truncation"] = sol.truncation;
    res["condition"] = sol.condition;
    res["method"] = "least-squares-birkhoff";
    out.report["residuals"]["factorization"] = sol.residual;

    DualFactorization dual =
        dual_factorize(j, sol, pt.gamma, flow.samples(grid, +1), grid, sc.tail_tol);
    out.report["residuals"]["dual_T"] = dual.residual_t;
    out.report["residuals"]["dual_S"] = dual.residual_s;

    double h = sc.fd_step;
    double worst = 0.0;
    auto& cmp = out.report["results"]["widom_vs_fd"];
    cmp = nlohmann::ordered_json::object();
    for (const auto& [jj, v] : sc.times) {
        (void)v;
        BlockLoop dj = scale(flow.generator(jj) * j, -1.0);
        cplx wid = widom_derivative(dual, dj, grid);
        auto tau_at = [&](double tv) {
            BlockLoop jt = jump(pt, flow.with_time(jj, flow.time(jj) + tv), sc.tail_tol);
            return fredholm_det(jt, sc.m_h, sc.tail_tol);
        };
        cplx fd = (tau_at(h) - tau_at(-h)) / (2.0 * h);
        double resid = std::abs(wid - fd);
        worst = std::max(worst, resid);
        nlohmann::ordered_json entry;
        entry["widom"] = detail::complex_json(wid);
        entry["finite_difference"] = detail::complex_json(fd);
        entry["residual"] = resid;
        cmp["t" + std::to_string(jj)] = entry;
    }
    out.report["residuals"]["max_widom_vs_fd"] = worst;
    clock.stop(out.report["timings_ms"]);
    return out;
}

// ---- ds ------------------------------------------------------------------

inline RunResult cmd_ds(const Scenario& sc, const std::string& digest) {
    RunResult out;
    out.report = report_skeleton(sc, digest, "ds");
    detail::StageClock clock;
    clock.start("compute");
    if (sc.family != "principal_A")
        throw SchemaError("cmd_ds: flows.family must be principal_A");
    AffineData data = AffineData::type_a(sc.n);
    GrassmannPoint pt = scenario_point(sc);
    FlowGroupElement flow = scenario_flow(sc, sc.times);
    NumericParams params = scenario_params(sc);
    auto& res = out.report["results"];
    res["family"] = "A" + std::to_string(sc.n - 1) + "^(1)";
    res["method"] = "dressing-vs-fd";
    double worst = 0.0;
    for (const auto& [j, v] : sc.times) {
        (void)v;
        if (!data.is_exponent(j)) {
            out.report["notes"].push_back("flow t" + std::to_string(j)
                                          + " skipped: not an exponent of the gradation");
            continue;
        }
        double r = ds_tau_relation_check(pt, flow, j, data, params);
        out.report["residuals"]["t" + std::to_string(j)] = r;
        worst = std::max(worst, r);
    }
    out.report["residuals"]["max"] = worst;
    clock.stop(out.report["timings_ms"]);
    return out;
}

} // namespace taufn
