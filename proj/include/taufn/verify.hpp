#pragma once

#include <random>

#include "taufn/runners.hpp"

namespace taufn {

// Curated example inputs used by the verification suite and shipped as
// scenario files alongside the binary.
namespace standard {

inline GrassmannPoint scalar_point() {
    return GrassmannPoint(preset_one_pole(cplx(0.3, 0.0)), "scalar-standard");
}

inline std::map<int, double> scalar_times() { return {{1, 1.0}, {2, 0.5}, {3, 0.0}}; }

inline FlowGroupElement scalar_flow(const std::map<int, double>& times) {
    return kp_flows(1, times, 3);
}

inline Mat matrix2_c() {
    Mat c(2, 2);
    c << 0.0, 0.2, 0.1, 0.0;
    return c;
}

inline GrassmannPoint matrix2_point() {
    return GrassmannPoint(BlockLoop::identity(2) + BlockLoop::monomial(-1, matrix2_c()),
                          "matrix2x2-standard");
}

inline std::map<int, double> matrix2_times() { return {{1, 0.62}, {2, -0.44}, {3, 0.31}}; }

inline FlowGroupElement matrix2_flow(const std::map<int, double>& times) {
    return principal_flows(AffineData::type_a(2), times);
}

inline GrassmannPoint ds2_point() {
    Mat v(2, 2);
    v << 0.05, 0.2, 0.1, -0.05;
    return GrassmannPoint(preset_exp_of(BlockLoop::monomial(-1, v)), "ds-n2");
}

inline std::map<int, double> ds2_times() { return {{1, 0.12}, {3, 0.05}}; }

inline GrassmannPoint ds3_point() {
    Mat v(3, 3);
    v << 0.05, 0.12, 0.08, 0.1, -0.03, 0.09, 0.07, 0.11, -0.02;
    return GrassmannPoint(preset_exp_of(BlockLoop::monomial(-1, v)), "ds-n3");
}

inline std::map<int, double> ds3_times() { return {{1, 0.1}, {2, 0.07}}; }

inline GrassmannPoint soliton_point() {
    return GrassmannPoint(preset_one_pole(cplx(0.5, 0.0), cplx(0.4, 0.0)), "soliton");
}

inline std::map<int, double> soliton_times() { return {{1, 0.3}, {2, 0.1}, {3, 0.05}}; }

// The shipped scalar standard scenario; scenarios/scalar_standard.json
// carries these same bytes.
inline const char* scalar_scenario_json() {
    return R"({
  "name": "scalar-standard",
  "point": {"n": 1, "preset": "one_pole", "c": 0.3},
  "flows": {
    "family": "kp",
    "n": 1,
    "times": {"1": 1.0, "2": 0.5, "3": 0.0},
    "lattice": {"axes": [1, 2, 3], "half_width": 1, "step": 0.01}
  },
  "numerics": {"M": 256, "P": 24, "M_H": 24, "N_schedule": [8, 16, 32, 64, 128], "fd_step": 0.0001},
  "outputs": {"csv": "tau.csv", "report": "report.json"}
}
)";
}

} // namespace standard

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double ms = 0.0;
};

namespace detail {

struct ExampleCase {
    GrassmannPoint point;
    std::string family;  // "kp" or "principal_A"
};

inline FlowGroupElement example_flow(const ExampleCase& ex, const std::map<int, double>& t) {
    if (ex.family == "kp") return kp_flows(ex.point.dim(), t, 3);
    return principal_flows(AffineData::type_a(ex.point.dim()), t);
}

inline std::string fmt_res(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return std::string(buf);
}

inline Mat random_traceless(int n, std::mt19937_64& rng, double amp) {
    std::uniform_real_distribution<double> u(-amp, amp);
    Mat m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = cplx(u(rng), u(rng));
    cplx tr = m.trace() / static_cast<double>(n);
    for (int i = 0; i < n; ++i) m(i, i) -= tr;
    return m;
}

} // namespace detail

// Runs the full cross-method identity suite.  Each criterion is measured
// against the pinned tolerance; nothing here adapts a tolerance to make a
// check pass.
inline std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed, int jobs = 1) {
    std::vector<CriterionResult> results;
    auto timed = [&](int id, const std::string& name, auto&& body) {
        CriterionResult r;
        r.id = id;
        r.name = name;
        auto t0 = std::chrono::steady_clock::now();
        try {
            body(r);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.ms = std::chrono::duration_cast<std::chrono::microseconds>(
                   std::chrono::steady_clock::now() - t0)
                   .count()
               / 1000.0;
        results.push_back(std::move(r));
    };

    // 1. Three independent evaluations of the scalar standard tau value.
    timed(1, "strong-szego-oracle", [&](CriterionResult& r) {
        GrassmannPoint pt = standard::scalar_point();
        FlowGroupElement fl = standard::scalar_flow(standard::scalar_times());
        BlockLoop j = jump(pt, fl);
        cplx a = fredholm_det(j, 24);
        cplx b = szego_widom_limit(j, {8, 16, 32, 64, 128}).value;
        cplx c = strong_szego_scalar(j);
        double d_ab = std::abs(a - b), d_ac = std::abs(a - c), d_bc = std::abs(b - c);
        double d_pin = std::abs(a - cplx(-0.255, 0.0));
        double worst = std::max({d_ab, d_ac, d_bc, d_pin});
        r.pass = worst <= 1e-8;
        r.detail = "log tau = " + format_sig17(a.real()) + ", route spread "
                   + detail::fmt_res(std::max({d_ab, d_ac, d_bc})) + ", vs -0.255 "
                   + detail::fmt_res(d_pin);
    });
    if (!results.empty() && results.back().ms > 10000.0) {
        results.back().pass = false;
        results.back().detail += " [runtime over 10 s]";
    }

    std::vector<detail::ExampleCase> examples;
    examples.push_back({standard::scalar_point(), "kp"});
    examples.push_back({standard::matrix2_point(), "principal_A"});

    auto random_points = [&](std::uint64_t salt) {
        std::mt19937_64 rng(seed ^ salt);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<std::map<int, double>> pts;
        for (int i = 0; i < 5; ++i)
            pts.push_back({{1, u(rng)}, {2, u(rng)}, {3, u(rng)}});
        return pts;
    };

    // 2. Sato route vs Malgrange-JMU route for flows t1, t2, t3.
    timed(2, "sato-vs-jmu", [&](CriterionResult& r) {
        double worst = 0.0;
        NumericParams params;
        params.truncation = 28;
        for (const auto& ex : examples) {
            for (const auto& t : random_points(0x5a70)) {
                FlowGroupElement fl = detail::example_flow(ex, t);
                BakerFunction bf = baker_function(ex.point, fl, params);
                CircleGrid grid(detail::next_pow2(
                    CircleGrid::for_bandwidth(bf.jump_symbol.bandwidth() + 2).size()));
                for (int j = 1; j <= 3; ++j) {
                    cplx sato = generalized_sato_logderiv(bf, fl.generator(j));
                    BlockLoop dj = scale(fl.generator(j) * bf.jump_symbol, -1.0);
                    cplx jmu = malgrange_jmu_logderiv(bf.rh, bf.jump_symbol, dj, grid);
                    worst = std::max(worst, std::abs(sato - jmu));
                }
            }
        }
        r.pass = worst <= 1e-6;
        r.detail = "max |sato - jmu| = " + detail::fmt_res(worst) + " over 2x5x3 cases";
    });

    // 3. JMU vs Widom vs finite difference of the operator determinant.
    timed(3, "jmu-widom-fd-chain", [&](CriterionResult& r) {
        double worst_wj = 0.0, worst_fd = 0.0;
        NumericParams params;
        params.truncation = 28;
        const double h = 1e-4;
        for (const auto& ex : examples) {
            for (const auto& t : random_points(0x5a70)) {
                FlowGroupElement fl = detail::example_flow(ex, t);
                BlockLoop j = jump(ex.point, fl);
                CircleGrid grid(detail::next_pow2(
                    CircleGrid::for_bandwidth(j.bandwidth() + 2).size()));
                RHSolution sol = birkhoff_factorize(j, params.truncation, grid);
                DualFactorization dual =
                    dual_factorize(j, sol, ex.point.gamma, fl.samples(grid, +1), grid);
                for (int jj = 1; jj <= 3; ++jj) {
                    BlockLoop dj = scale(fl.generator(jj) * j, -1.0);
                    cplx jmu = malgrange_jmu_logderiv(sol, j, dj, grid);
                    cplx wid = widom_derivative(dual, dj, grid);
                    auto tau_at = [&](double shift) {
                        FlowGroupElement f2 = fl.with_time(jj, fl.time(jj) + shift);
                        return fredholm_det(jump(ex.point, f2), 28);
                    };
                    cplx fd = (tau_at(h) - tau_at(-h)) / (2.0 * h);
                    worst_wj = std::max(worst_wj, std::abs(jmu - wid));
                    worst_fd = std::max({worst_fd, std::abs(jmu - fd), std::abs(wid - fd)});
                }
            }
        }
        r.pass = worst_wj <= 1e-6 && worst_fd <= 1e-6;
        r.detail = "max |jmu - widom| = " + detail::fmt_res(worst_wj)
                   + ", max vs fd = " + detail::fmt_res(worst_fd);
    });

    // 4. Toeplitz-Hankel identity on random band-2 symbols.
    timed(4, "toeplitz-hankel-identity", [&](CriterionResult& r) {
        std::mt19937_64 rng(seed ^ 0x7031u);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            auto rand_loop = [&]() {
                BlockLoop l(2, -2, 2);
                for (int k = -2; k <= 2; ++k)
                    for (int i = 0; i < 2; ++i)
                        for (int j = 0; j < 2; ++j) l.block(k)(i, j) = cplx(u(rng), u(rng));
                return l;
            };
            worst = std::max(worst, identity_residual(rand_loop(), rand_loop(), 32));
        }
        r.pass = worst <= 1e-12;
        r.detail = "max window residual = " + detail::fmt_res(worst) + " over 20 pairs";
    });

    // 5. Szego-Widom convergence of the normalized determinant sequence.
    // The error sits at rounding level almost immediately for this symbol,
    // so the ratio test applies only while the error resolves above the
    // 1e-8 acceptance scale.
    timed(5, "szego-widom-convergence", [&](CriterionResult& r) {
        BlockLoop x(1, -1, 1);
        x.block(-1)(0, 0) = 0.5;
        x.block(1)(0, 0) = 0.5;
        BlockLoop phi = preset_exp_of(x);
        CircleGrid grid = CircleGrid::for_bandwidth(phi.bandwidth());
        cplx log_g = geometric_mean_log(phi, grid);
        std::vector<int> ns = {16, 32, 64, 128};
        std::vector<double> err;
        for (int n_trunc : ns) {
            cplx y = log_det_DN(phi, n_trunc) - static_cast<double>(n_trunc + 1) * log_g;
            err.push_back(std::abs(y - cplx(0.25, 0.0)));
        }
        bool ratios_ok = true;
        for (size_t i = 0; i + 1 < err.size(); ++i)
            if (err[i] > 1e-8 && err[i + 1] >= err[i]) ratios_ok = false;
        r.pass = ratios_ok && err.back() <= 1e-8;
        r.detail = "errors";
        for (double e : err) r.detail += " " + detail::fmt_res(e);
    });

    // 6. Closedness of the Malgrange one-form.
    timed(6, "malgrange-closedness", [&](CriterionResult& r) {
        double worst = 0.0;
        for (const auto& ex : examples) {
            JumpFamily fam;
            const detail::ExampleCase* exc = &ex;
            fam.jump_at = [exc](const std::map<int, double>& t) {
                return jump(exc->point, detail::example_flow(*exc, t));
            };
            fam.flow_derivative = [exc](const BlockLoop& j, int flow_idx) {
                FlowGroupElement fl = detail::example_flow(*exc, {{1, 0.0}, {2, 0.0}, {3, 0.0}});
                return scale(fl.generator(flow_idx) * j, -1.0);
            };
            fam.base_times = ex.family == "kp" ? standard::scalar_times()
                                               : standard::matrix2_times();
            fam.truncation = 28;
            fam.grid_m = 512;
            worst = std::max(worst, closedness_residual(fam, 1, 2, 1e-3));
            worst = std::max(worst, closedness_residual(fam, 1, 3, 1e-3));
        }
        r.pass = worst <= 1e-6;
        r.detail = "max cross-derivative residual = " + detail::fmt_res(worst);
    });

    // 7. Baker normalization and membership on all standard scenarios.
    timed(7, "baker-properties", [&](CriterionResult& r) {
        struct Case {
            GrassmannPoint pt;
            FlowGroupElement fl;
        };
        std::vector<Case> cases;
        cases.push_back({standard::scalar_point(), standard::scalar_flow(standard::scalar_times())});
        cases.push_back({standard::matrix2_point(), standard::matrix2_flow(standard::matrix2_times())});
        cases.push_back({standard::ds2_point(),
                         principal_flows(AffineData::type_a(2), standard::ds2_times())});
        cases.push_back({standard::ds3_point(),
                         principal_flows(AffineData::type_a(3), standard::ds3_times())});
        double worst_norm = 0.0, worst_member = 0.0;
        NumericParams params;
        params.truncation = 28;
        for (const auto& c : cases) {
            BakerFunction bf = baker_function(c.pt, c.fl, params);
            worst_norm = std::max(worst_norm, baker_normalization_residual(bf, c.fl));
            worst_member = std::max(worst_member, membership_residual(bf, c.pt));
        }
        r.pass = worst_norm <= 1e-9 && worst_member <= 1e-8;
        r.detail = "max normalization = " + detail::fmt_res(worst_norm)
                   + ", max membership = " + detail::fmt_res(worst_member);
    });

    // 8. Scalar Sato shift identity.
    timed(8, "sato-shift", [&](CriterionResult& r) {
        std::map<int, double> t = {{1, 0.4}, {2, 0.15}, {3, -0.1}};
        double r1 = sato_shift_check(standard::scalar_point(), kp_flows(1, t), cplx(2.0, 0.0), 12);
        double r2 = sato_shift_check(standard::soliton_point(), kp_flows(1, t), cplx(2.0, 0.0), 12);
        double worst = std::max(r1, r2);
        r.pass = worst <= 1e-6;
        r.detail = "relative discrepancies " + detail::fmt_res(r1) + ", " + detail::fmt_res(r2);
    });

    // 9. Kac-Moody layer: cyclic element, cocycle pairing, Jacobi identity.
    timed(9, "kacmoody-structure", [&](CriterionResult& r) {
        for (int n = 2; n <= 6; ++n) {
            BlockLoop p = BlockLoop::identity(n);
            BlockLoop lam = principal_lambda(n);
            for (int i = 0; i < n; ++i) p = p * lam;
            p = p.trimmed();
            BlockLoop want = z_shift(BlockLoop::identity(n), 1);
            if (p.k_min() != want.k_min() || p.k_max() != want.k_max())
                throw Error("Lambda^n support mismatch at n=" + std::to_string(n));
            for (int k = p.k_min(); k <= p.k_max(); ++k)
                if (detail::max_abs(Mat(p.block(k) - want.coeff(k))) != 0.0)
                    throw Error("Lambda^n != z Id exactly at n=" + std::to_string(n));
        }
        double worst_pairing = 0.0;
        for (int n : {2, 3}) {
            AffineData data = AffineData::type_a(n);
            for (int j = -(2 * n + 1); j <= 2 * n + 1; ++j) {
                if (j == 0 || !data.is_exponent(j)) continue;
                for (int k = -(2 * n + 1); k <= 2 * n + 1; ++k) {
                    if (k == 0 || !data.is_exponent(k)) continue;
                    cplx w = cocycle(lambda_j(data, j), lambda_j(data, k), data);
                    cplx want = (k == -j) ? cplx(static_cast<double>(j), 0.0) : cplx(0.0, 0.0);
                    worst_pairing = std::max(worst_pairing, std::abs(w - want));
                }
            }
        }
        std::mt19937_64 rng(seed ^ 0x9ac0u);
        double worst_jacobi = 0.0;
        std::uniform_real_distribution<double> u(-0.5, 0.5);
        for (int trial = 0; trial < 50; ++trial) {
            int n = (trial % 2) ? 3 : 2;
            AffineData data = AffineData::type_a(n);
            auto rand_elem = [&]() {
                std::vector<std::pair<int, Mat>> entries;
                for (int k = -2; k <= 2; ++k)
                    entries.emplace_back(k, detail::random_traceless(n, rng, 0.5));
                return ExtendedElement(BlockLoop::from_coeffs(n, entries), cplx(u(rng), u(rng)));
            };
            ExtendedElement x = rand_elem(), y = rand_elem(), z = rand_elem();
            ExtendedElement t1 = extended_bracket(extended_bracket(x, y, data), z, data);
            ExtendedElement t2 = extended_bracket(extended_bracket(y, z, data), x, data);
            ExtendedElement t3 = extended_bracket(extended_bracket(z, x, data), y, data);
            BlockLoop loop_sum = t1.loop + t2.loop + t3.loop;
            for (int k = loop_sum.k_min(); k <= loop_sum.k_max(); ++k)
                worst_jacobi = std::max(worst_jacobi, detail::max_abs(loop_sum.block(k)));
            worst_jacobi = std::max(worst_jacobi,
                                    std::abs(t1.central + t2.central + t3.central));
        }
        r.pass = worst_pairing <= 1e-10 && worst_jacobi <= 1e-10;
        r.detail = "pairing defect " + detail::fmt_res(worst_pairing) + ", jacobi defect "
                   + detail::fmt_res(worst_jacobi);
    });

    // 10. Series vs contour central coefficient (adjoint orbit).
    timed(10, "adjoint-c-coefficient", [&](CriterionResult& r) {
        std::mt19937_64 rng(seed ^ 0xadc0u);
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            int n = (trial % 2) ? 3 : 2;
            AffineData data = AffineData::type_a(n);
            std::vector<std::pair<int, Mat>> entries;
            for (int k = -3; k <= -1; ++k)
                entries.emplace_back(k, detail::random_traceless(n, rng, 0.4));
            BlockLoop x = BlockLoop::from_coeffs(n, entries);
            CircleGrid grid(64);
            double nrm = sup_norm(x, grid);
            if (nrm > 0.5) x = scale(x, 0.5 / nrm);
            BlockLoop y = lambda_j(data, (trial % 4 < 2) ? 1 : (n == 2 ? 3 : 2));
            AdjointCoefficient ac = adjoint_c_coefficient(x, y, data);
            worst = std::max(worst, std::abs(ac.series_value - ac.contour_value));
        }
        r.pass = worst <= 1e-8;
        r.detail = "max |series - contour| = " + detail::fmt_res(worst) + " over 20 draws";
    });

    // 11. Drinfeld-Sokolov dressing relation against the tau derivative.
    timed(11, "ds-tau-relation", [&](CriterionResult& r) {
        NumericParams params;
        params.truncation = 28;
        AffineData a2 = AffineData::type_a(2), a3 = AffineData::type_a(3);
        FlowGroupElement f2 = principal_flows(a2, standard::ds2_times());
        FlowGroupElement f3 = principal_flows(a3, standard::ds3_times());
        double r21 = ds_tau_relation_check(standard::ds2_point(), f2, 1, a2, params);
        double r23 = ds_tau_relation_check(standard::ds2_point(), f2, 3, a2, params);
        double r31 = ds_tau_relation_check(standard::ds3_point(), f3, 1, a3, params);
        double r32 = ds_tau_relation_check(standard::ds3_point(), f3, 2, a3, params);
        double worst = std::max({r21, r23, r31, r32});
        r.pass = worst <= 1e-6;
        r.detail = "n=2: " + detail::fmt_res(r21) + "/" + detail::fmt_res(r23)
                   + ", n=3: " + detail::fmt_res(r31) + "/" + detail::fmt_res(r32);
    });

    // 12. Hirota bilinear identity on the soliton-like scenario.
    timed(12, "hirota-bilinear", [&](CriterionResult& r) {
        double res = hirota_kp_residual(standard::soliton_point(), standard::soliton_times(), 4,
                                        1e-2, NumericParams{}, jobs);
        r.pass = res <= 1e-4;
        r.detail = "relative residual = " + detail::fmt_res(res);
    });

    // 13. Byte-identical tau sweep across repeated runs and thread counts.
    timed(13, "reproducibility", [&](CriterionResult& r) {
        Scenario sc = parse_scenario(standard::scalar_scenario_json());
        std::string digest = fnv1a_digest(standard::scalar_scenario_json());
        std::string a = cmd_tau(sc, digest, 1).csv;
        std::string b = cmd_tau(sc, digest, 1).csv;
        std::string c = cmd_tau(sc, digest, 4).csv;
        r.pass = !a.empty() && a == b && a == c;
        r.detail = "csv bytes " + std::to_string(a.size()) + ", repeat match "
                   + (a == b ? "yes" : "no") + ", jobs-4 match " + (a == c ? "yes" : "no");
    });

    return results;
}

} // namespace taufn
