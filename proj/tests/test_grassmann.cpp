#include <catch2/catch_amalgamated.hpp>

#include <taufn/grassmann.hpp>
#include <taufn/verify.hpp>

#include <cmath>

using namespace taufn;

namespace {

BlockLoop scalar_loop(const std::vector<std::pair<int, cplx>>& entries) {
    std::vector<std::pair<int, Mat>> blocks;
    for (const auto& [k, v] : entries) {
        Mat m(1, 1);
        m(0, 0) = v;
        blocks.emplace_back(k, m);
    }
    return BlockLoop::from_coeffs(1, blocks);
}

} // namespace

TEST_CASE("Grassmannian point validation") {
    SECTION("accepts nonpositive support with unit constant term") {
        GrassmannPoint pt = standard::scalar_point();
        REQUIRE(pt.gamma.k_max() == 0);
        REQUIRE(pt.gamma.coeff(0)(0, 0) == cplx(1.0, 0.0));
    }
    SECTION("rejects positive Fourier modes") {
        REQUIRE_THROWS_AS(GrassmannPoint(scalar_loop({{0, 1.0}, {1, 0.2}})), Error);
    }
    SECTION("rejects a non-identity constant term") {
        REQUIRE_THROWS_AS(GrassmannPoint(scalar_loop({{0, 1.2}, {-1, 0.2}})), Error);
    }
    SECTION("snaps a nearly exact constant term to the identity") {
        GrassmannPoint pt(scalar_loop({{0, 1.0 + 1e-15}, {-1, 0.2}}));
        REQUIRE(pt.gamma.coeff(0)(0, 0) == cplx(1.0, 0.0));
    }
}

TEST_CASE("flow group elements") {
    SECTION("KP generators are powers of z") {
        FlowGroupElement flow = kp_flows(1, {{1, 1.0}, {2, 0.5}}, 3);
        REQUIRE(flow.generator(2).k_min() == 2);
        REQUIRE(flow.generator(2).k_max() == 2);
        REQUIRE(flow.generator(2).coeff(2)(0, 0) == cplx(1.0, 0.0));
    }
    SECTION("noncommuting generators are rejected") {
        Mat e12 = Mat::Zero(2, 2), e21 = Mat::Zero(2, 2);
        e12(0, 1) = 1.0;
        e21(1, 0) = 1.0;
        std::vector<std::pair<int, BlockLoop>> gens{
            {1, BlockLoop::monomial(1, e12)}, {2, BlockLoop::monomial(2, e21)}};
        REQUIRE_THROWS_AS(FlowGroupElement(2, gens, {{1, 0.1}, {2, 0.1}}), Error);
    }
    SECTION("every timed flow needs a generator") {
        std::vector<std::pair<int, BlockLoop>> gens{
            {1, BlockLoop::monomial(1, Mat::Identity(1, 1))}};
        REQUIRE_THROWS_AS(FlowGroupElement(1, gens, {{7, 0.1}}), Error);
    }
    SECTION("evaluation matches the scalar exponential") {
        FlowGroupElement flow = kp_flows(1, {{1, 0.7}, {2, -0.2}}, 2);
        CircleGrid grid(64);
        std::vector<Mat> vals = flow.samples(grid, +1);
        cplx z = grid.node(5);
        cplx expect = std::exp(0.7 * z - 0.2 * z * z);
        REQUIRE(std::abs(vals[5](0, 0) - expect) < 1e-13);
    }
}

TEST_CASE("jump symbol construction") {
    SECTION("zero times return gamma itself") {
        GrassmannPoint pt = standard::scalar_point();
        FlowGroupElement flow = kp_flows(1, {{1, 0.0}, {2, 0.0}}, 2);
        BlockLoop j = jump(pt, flow, 1e-14).trimmed(1e-13);
        REQUIRE(std::abs(j.coeff(0)(0, 0) - cplx(1.0, 0.0)) < 1e-13);
        REQUIRE(std::abs(j.coeff(-1)(0, 0) - cplx(0.3, 0.0)) < 1e-13);
        REQUIRE(j.k_max() == 0);
    }
    SECTION("plane wave at t1 = 1 mixes the constant term") {
        GrassmannPoint pt = standard::scalar_point();
        FlowGroupElement flow = kp_flows(1, {{1, 1.0}}, 1);
        BlockLoop j = jump(pt, flow, 1e-14);
        // exp(-z)(1 + 0.3/z): J_{-1} = 0.3, J_0 = 1 - 0.3 = 0.7
        REQUIRE(std::abs(j.coeff(-1)(0, 0) - cplx(0.3, 0.0)) < 1e-12);
        REQUIRE(std::abs(j.coeff(0)(0, 0) - cplx(0.7, 0.0)) < 1e-12);
        REQUIRE(j.k_min() == pt.gamma.k_min());
    }
    SECTION("matrix flow agrees with nodewise evaluation") {
        GrassmannPoint pt = standard::matrix2_point();
        FlowGroupElement flow = standard::matrix2_flow({{1, 0.4}});
        BlockLoop j = jump(pt, flow, 1e-14);
        CircleGrid grid(256);
        std::vector<Mat> gi = flow.samples(grid, -1);
        for (int m = 0; m < grid.size(); m += 31) {
            Mat expect = gi[static_cast<size_t>(m)] * eval(pt.gamma, grid.node(m));
            REQUIRE(detail::max_abs(eval(j, grid.node(m)) - expect) < 1e-12);
        }
    }
}

TEST_CASE("tau through the operator determinant") {
    SECTION("zero times give log tau zero for every point") {
        for (const GrassmannPoint& pt :
             {standard::scalar_point(), standard::soliton_point()}) {
            FlowGroupElement flow = kp_flows(1, {{1, 0.0}}, 1);
            TauEvaluation ev = tau_ssw(pt, flow);
            REQUIRE(ev.big_cell);
            REQUIRE(std::abs(ev.log_value) < 1e-13);
        }
    }
    SECTION("scalar standard value -0.255") {
        TauEvaluation ev =
            tau_ssw(standard::scalar_point(), standard::scalar_flow(standard::scalar_times()));
        REQUIRE(ev.big_cell);
        REQUIRE(std::abs(ev.log_value - cplx(-0.255, 0.0)) < 1e-9);
        REQUIRE(ev.method == "fredholm");
    }
    SECTION("operator and extrapolation routes agree on the 2x2 point") {
        GrassmannPoint pt = standard::matrix2_point();
        FlowGroupElement flow = standard::matrix2_flow({{1, 0.4}});
        NumericParams fred;
        TauEvaluation a = tau_ssw(pt, flow, fred);
        NumericParams extra;
        extra.method = "extrapolation";
        extra.schedule = {8, 16, 32, 64};
        TauEvaluation b = tau_ssw(pt, flow, extra);
        REQUIRE(std::abs(a.log_value - b.log_value) <= 1e-8);
    }
    SECTION("flow additivity: the group law holds pointwise and in tau") {
        GrassmannPoint pt = standard::scalar_point();
        std::map<int, double> t{{1, 0.3}, {2, -0.2}, {3, 0.1}};
        std::map<int, double> s{{1, 0.25}, {2, 0.3}, {3, -0.15}};
        std::map<int, double> ts;
        for (int j : {1, 2, 3}) ts[j] = t[j] + s[j];
        CircleGrid grid(64);
        std::vector<Mat> a = kp_flows(1, t, 3).samples(grid, +1);
        std::vector<Mat> b = kp_flows(1, s, 3).samples(grid, +1);
        std::vector<Mat> c = kp_flows(1, ts, 3).samples(grid, +1);
        for (int m = 0; m < grid.size(); ++m) {
            Mat prod = a[static_cast<size_t>(m)] * b[static_cast<size_t>(m)];
            REQUIRE(detail::max_abs(prod - c[static_cast<size_t>(m)]) < 1e-12);
        }
        // log tau at t + s matches the plane-wave closed form
        cplx direct = tau_ssw(pt, kp_flows(1, ts, 3)).log_value;
        cplx closed(0.0, 0.0);
        for (int j : {1, 2, 3}) closed += ts[j] * std::pow(cplx(-0.3, 0.0), j);
        REQUIRE(std::abs(direct - closed) < 1e-9);
    }
}

TEST_CASE("Baker function") {
    SECTION("identity point: w equals the flow itself") {
        GrassmannPoint pt(BlockLoop::identity(1));
        FlowGroupElement flow = kp_flows(1, {{1, 0.8}}, 1);
        BakerFunction bf = baker_function(pt, flow);
        cplx z(1.0, 0.0);
        REQUIRE(std::abs(eval(bf.w, z)(0, 0) - std::exp(cplx(0.8, 0.0))) < 1e-10);
        REQUIRE(membership_residual(bf, pt) < 1e-10);
    }
    SECTION("scalar standard: w = g (1 + 0.3/z)") {
        GrassmannPoint pt = standard::scalar_point();
        FlowGroupElement flow = standard::scalar_flow(standard::scalar_times());
        NumericParams params;
        params.truncation = 28;
        BakerFunction bf = baker_function(pt, flow, params);
        cplx z(0.2, 0.95);
        z /= std::abs(z);
        cplx g = std::exp(1.0 * z + 0.5 * z * z);
        cplx expect = g * (1.0 + 0.3 / z);
        REQUIRE(std::abs(eval(bf.w, z)(0, 0) - expect) < 1e-9);
        REQUIRE(membership_residual(bf, pt) <= 1e-12);
        REQUIRE(baker_normalization_residual(bf, flow) <= 1e-9);
    }
    SECTION("2x2 standard: defining properties hold numerically") {
        GrassmannPoint pt = standard::matrix2_point();
        FlowGroupElement flow = standard::matrix2_flow(standard::matrix2_times());
        NumericParams params;
        params.truncation = 28;
        BakerFunction bf = baker_function(pt, flow, params);
        REQUIRE(baker_normalization_residual(bf, flow) <= 1e-9);
        REQUIRE(membership_residual(bf, pt) <= 1e-8);
    }
}

TEST_CASE("generalized Sato log-derivative") {
    SECTION("identity point differentiates to zero") {
        GrassmannPoint pt(BlockLoop::identity(1));
        FlowGroupElement flow = kp_flows(1, {{1, 0.5}, {2, 0.2}}, 2);
        cplx v = generalized_sato_logderiv(pt, flow, 1);
        REQUIRE(std::abs(v) < 1e-10);
    }
    SECTION("scalar standard derivatives") {
        GrassmannPoint pt = standard::scalar_point();
        FlowGroupElement flow = standard::scalar_flow(standard::scalar_times());
        NumericParams params;
        params.truncation = 28;
        cplx d1 = generalized_sato_logderiv(pt, flow, 1, params);
        cplx d2 = generalized_sato_logderiv(pt, flow, 2, params);
        REQUIRE(std::abs(d1 - cplx(-0.3, 0.0)) < 1e-8);
        REQUIRE(std::abs(d2 - cplx(0.09, 0.0)) < 1e-8);
    }
    SECTION("matches a central difference of log tau") {
        GrassmannPoint pt = standard::matrix2_point();
        FlowGroupElement flow = standard::matrix2_flow(standard::matrix2_times());
        NumericParams params;
        params.truncation = 28;
        for (int j : {1, 2}) {
            cplx sato = generalized_sato_logderiv(pt, flow, j, params);
            double h = 1e-4;
            auto at = [&](double dv) {
                return tau_ssw(pt, flow.with_time(j, flow.time(j) + dv), params).log_value;
            };
            cplx fd = (at(h) - at(-h)) / (2.0 * h);
            REQUIRE(std::abs(sato - fd) <= 1e-6);
        }
    }
    SECTION("agrees with the contour log-derivative route") {
        GrassmannPoint pt = standard::matrix2_point();
        FlowGroupElement flow = standard::matrix2_flow(standard::matrix2_times());
        BlockLoop j = jump(pt, flow, 1e-14);
        CircleGrid grid(256);
        RHSolution sol = birkhoff_factorize(j, 28, grid);
        NumericParams params;
        params.truncation = 28;
        for (int idx : {1, 2, 3}) {
            cplx sato = generalized_sato_logderiv(pt, flow, idx, params);
            BlockLoop dj = scale(flow.generator(idx) * j, -1.0);
            cplx jmu = malgrange_jmu_logderiv(sol, j, dj, grid);
            REQUIRE(std::abs(sato - jmu) <= 1e-6);
        }
    }
}

TEST_CASE("Sato shift identity") {
    SECTION("identity point is exact") {
        GrassmannPoint pt(BlockLoop::identity(1));
        FlowGroupElement flow = kp_flows(1, {{1, 0.4}}, 1);
        REQUIRE(sato_shift_check(pt, flow, cplx(2.0, 0.0), 12) < 1e-10);
    }
    SECTION("scalar standard point at z0 = 2") {
        GrassmannPoint pt = standard::scalar_point();
        FlowGroupElement flow = kp_flows(1, {{1, 0.4}, {2, 0.15}, {3, -0.1}}, 3);
        REQUIRE(sato_shift_check(pt, flow, cplx(2.0, 0.0), 12) <= 1e-6);
    }
    SECTION("one-pole point at z0 = 3") {
        GrassmannPoint pt = standard::soliton_point();
        FlowGroupElement flow = kp_flows(1, {{1, 0.3}, {2, 0.1}}, 2);
        REQUIRE(sato_shift_check(pt, flow, cplx(3.0, 0.0), 16) <= 1e-5);
    }
    SECTION("matrix points and inner evaluation points are refused") {
        GrassmannPoint pt(BlockLoop::identity(2));
        FlowGroupElement flow = kp_flows(2, {{1, 0.1}}, 1);
        REQUIRE_THROWS_AS(sato_shift_check(pt, flow, cplx(2.0, 0.0), 8), NotScalar);
        GrassmannPoint pt1 = standard::scalar_point();
        FlowGroupElement flow1 = kp_flows(1, {{1, 0.1}}, 1);
        REQUIRE_THROWS_AS(sato_shift_check(pt1, flow1, cplx(0.5, 0.0), 8), Error);
    }
}

TEST_CASE("Hirota bilinear residual") {
    SECTION("identity point vanishes to rounding") {
        GrassmannPoint pt(BlockLoop::identity(1));
        double r = hirota_kp_residual(pt, {{1, 0.0}, {2, 0.0}, {3, 0.0}}, 2, 1e-2);
        REQUIRE(r < 1e-9);
    }
    SECTION("plane-wave tau is annihilated up to the difference floor") {
        GrassmannPoint pt = standard::scalar_point();
        double r = hirota_kp_residual(pt, {{1, 0.5}, {2, 0.2}, {3, 0.1}}, 2, 1e-2);
        REQUIRE(r <= 1e-5);
    }
    SECTION("one-pole point stays below the acceptance bound on a small patch") {
        GrassmannPoint pt = standard::soliton_point();
        double r = hirota_kp_residual(pt, standard::soliton_times(), 2, 1e-2, {}, 2);
        REQUIRE(r <= 1e-4);
    }
}
