#include <catch2/catch_amalgamated.hpp>

#include <taufn/loops.hpp>
#include <taufn/toeplitz.hpp>
#include <taufn/kacmoody.hpp>

#include <cmath>
#include <random>

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

BlockLoop random_band_loop(int n, int kmin, int kmax, std::mt19937_64& rng, double amp = 1.0) {
    std::uniform_real_distribution<double> u(-amp, amp);
    BlockLoop r(n, kmin, kmax);
    for (int k = kmin; k <= kmax; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) r.block(k)(i, j) = cplx(u(rng), u(rng));
    return r;
}

// Cofactor expansion, the slow textbook determinant, usable up to dim 6.
cplx cofactor_det(const Mat& a) {
    Eigen::Index n = a.rows();
    if (n == 1) return a(0, 0);
    cplx acc(0.0, 0.0);
    double sign = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        Mat minor(n - 1, n - 1);
        for (Eigen::Index r = 1; r < n; ++r) {
            Eigen::Index cc = 0;
            for (Eigen::Index c = 0; c < n; ++c) {
                if (c == j) continue;
                minor(r - 1, cc++) = a(r, c);
            }
        }
        acc += sign * a(0, j) * cofactor_det(minor);
        sign = -sign;
    }
    return acc;
}

} // namespace

TEST_CASE("finite block Toeplitz sections") {
    SECTION("identity symbol gives the identity section") {
        BlockToeplitzFinite t = assemble_toeplitz(BlockLoop::identity(2), 2);
        REQUIRE(t.data.rows() == 6);
        REQUIRE(detail::max_abs(t.data - Mat::Identity(6, 6)) == 0.0);
    }
    SECTION("scalar 1 + 0.3/z at N = 1") {
        BlockToeplitzFinite t = assemble_toeplitz(scalar_loop({{0, 1.0}, {-1, 0.3}}), 1);
        Mat expect(2, 2);
        expect << 1.0, 0.3, 0.0, 1.0;
        REQUIRE(detail::max_abs(t.data - expect) == 0.0);
    }
    SECTION("shift-matrix symbol at N = 1 places blocks by j - k") {
        BlockToeplitzFinite t = assemble_toeplitz(principal_lambda(2), 1);
        REQUIRE(t.data.rows() == 4);
        Mat lam0 = Mat::Zero(2, 2), lam1 = Mat::Zero(2, 2);
        lam0(1, 0) = 1.0;  // constant block of the shift matrix
        lam1(0, 1) = 1.0;  // coefficient of z
        REQUIRE(detail::max_abs(t.data.block(0, 0, 2, 2) - lam0) == 0.0);
        REQUIRE(detail::max_abs(t.data.block(2, 2, 2, 2) - lam0) == 0.0);
        REQUIRE(detail::max_abs(t.data.block(2, 0, 2, 2) - lam1) == 0.0);
        REQUIRE(detail::max_abs(t.data.block(0, 2, 2, 2)) == 0.0);
    }
}

TEST_CASE("log determinant of finite sections") {
    SECTION("identity symbol") {
        REQUIRE(std::abs(log_det_DN(BlockLoop::identity(3), 7)) < 1e-14);
    }
    SECTION("triangular symbol has unit determinant at every N") {
        BlockLoop phi = scalar_loop({{0, 1.0}, {-1, 0.3}});
        for (int N : {0, 1, 5, 20}) REQUIRE(std::abs(log_det_DN(phi, N)) < 1e-13);
    }
    SECTION("exp(z/2 + 1/(2z)) approaches the strong Szego constant") {
        BlockLoop phi = preset_exp_of(scalar_loop({{1, 0.5}, {-1, 0.5}}));
        cplx oracle = strong_szego_scalar(phi);
        REQUIRE(std::abs(oracle - cplx(0.25, 0.0)) < 1e-12);
        cplx d32 = log_det_DN(phi, 32);  // G = 1 so normalization is trivial
        REQUIRE(std::abs(d32 - cplx(0.25, 0.0)) < 1e-9);
    }
    SECTION("singular sections return the sentinel instead of throwing") {
        Mat z = Mat::Zero(1, 1);
        cplx v = log_det(z);
        REQUIRE(is_log_det_sentinel(v));
    }
    SECTION("agrees with cofactor expansion on small sections") {
        std::mt19937_64 rng(4242);
        for (int trial = 0; trial < 10; ++trial) {
            BlockLoop phi = random_band_loop(2, -2, 2, rng);
            cplx lv = log_det_DN(phi, 2);  // 6x6
            cplx brute = cofactor_det(toeplitz_matrix(phi, 2));
            REQUIRE(std::abs(std::exp(lv) - brute) <= 1e-12 * std::max(1.0, std::abs(brute)));
        }
    }
}

TEST_CASE("Toeplitz product identity on the safe window") {
    SECTION("identity pair") {
        REQUIRE(identity_residual(BlockLoop::identity(2), BlockLoop::identity(2), 8) < 1e-15);
    }
    SECTION("scalar pair with no positive modes") {
        BlockLoop a = scalar_loop({{0, 1.0}, {-1, 0.3}});
        BlockLoop b = scalar_loop({{0, 1.0}, {-1, -0.3}});
        REQUIRE(identity_residual(a, b, 16) <= 1e-14);
    }
    SECTION("random band-2 blocks") {
        std::mt19937_64 rng(99);
        for (int trial = 0; trial < 10; ++trial) {
            BlockLoop a = random_band_loop(2, -2, 2, rng);
            BlockLoop b = random_band_loop(2, -2, 2, rng);
            REQUIRE(identity_residual(a, b, 32) <= 1e-12);
        }
    }
    SECTION("window must be nonempty") {
        std::mt19937_64 rng(1);
        BlockLoop a = random_band_loop(2, -2, 2, rng);
        REQUIRE_THROWS_AS(identity_residual(a, a, 3), WindowEmpty);
    }
}

TEST_CASE("Fredholm determinant of the Hankel product") {
    SECTION("no positive modes means zero log determinant") {
        BlockLoop phi = scalar_loop({{0, 1.0}, {-1, 0.3}, {-2, -0.1}});
        REQUIRE(std::abs(fredholm_det(phi, 8)) < 1e-14);
    }
    SECTION("no negative modes in the inverse also gives zero") {
        BlockLoop phi = scalar_loop({{0, 1.0}, {1, 0.3}});
        REQUIRE(std::abs(fredholm_det(phi, 8)) < 1e-12);
    }
    SECTION("plane wave times one pole") {
        // phi = exp(-t1 z) (1 + 0.3/z) at t1 = 1: log D_inf = -0.3
        BlockLoop g_inv = preset_exp_of(scalar_loop({{1, -1.0}}));
        BlockLoop phi = multiply(g_inv, scalar_loop({{0, 1.0}, {-1, 0.3}}));
        cplx v = fredholm_det(phi, 24);
        REQUIRE(std::abs(v - cplx(-0.3, 0.0)) < 1e-9);
    }
    SECTION("symmetric exponential symbol") {
        BlockLoop phi = preset_exp_of(scalar_loop({{1, 0.5}, {-1, 0.5}}));
        REQUIRE(std::abs(fredholm_det(phi, 24) - cplx(0.25, 0.0)) < 1e-9);
    }
    SECTION("det(Id - AB) = det(Id - BA) under swapping the Hankel factors") {
        std::mt19937_64 rng(808);
        BlockLoop phi = add(BlockLoop::identity(2), random_band_loop(2, -2, 2, rng, 0.15));
        BlockLoop inv = inverse_auto(phi, 1e-14);
        int m = 24;
        Mat h = hankel_matrix(phi, m);
        Mat ht = hankel_tilde_matrix(inv, m);
        Eigen::Index d = h.rows();
        cplx ab = log_det(Mat(Mat::Identity(d, d) - h * ht));
        cplx ba = log_det(Mat(Mat::Identity(d, d) - ht * h));
        REQUIRE(std::abs(ab - ba) < 1e-12);
    }
}

TEST_CASE("Szego-Widom limit estimation") {
    SECTION("identity symbol is exact at every N") {
        LimitEstimate est = szego_widom_limit(BlockLoop::identity(2), {4, 8, 16});
        REQUIRE(std::abs(est.value) < 1e-13);
        for (cplx v : est.normalized) REQUIRE(std::abs(v) < 1e-13);
    }
    SECTION("triangular symbol: normalized sequence identically zero") {
        BlockLoop phi = scalar_loop({{0, 1.0}, {-1, 0.3}});
        LimitEstimate est = szego_widom_limit(phi, {8, 16, 32});
        REQUIRE(est.schedule == std::vector<int>{8, 16, 32});
        for (cplx v : est.normalized) REQUIRE(std::abs(v) < 1e-12);
        REQUIRE(std::abs(est.value) < 1e-12);
    }
    SECTION("symmetric exponential symbol converges to 0.25") {
        BlockLoop phi = preset_exp_of(scalar_loop({{1, 0.5}, {-1, 0.5}}));
        LimitEstimate est = szego_widom_limit(phi, {16, 32, 64, 128});
        REQUIRE(std::abs(est.value - cplx(0.25, 0.0)) <= 1e-8);
    }
    SECTION("schedule must be strictly increasing") {
        REQUIRE_THROWS_AS(szego_widom_limit(BlockLoop::identity(1), {8, 8, 16}), Error);
    }
    SECTION("nonzero winding is refused") {
        REQUIRE_THROWS_AS(szego_widom_limit(principal_lambda(2), {8, 16, 32}), NonzeroWinding);
    }
}

TEST_CASE("scalar strong Szego oracle") {
    SECTION("only negative modes") {
        BlockLoop phi = scalar_loop({{0, 1.0}, {-1, 0.3}});
        REQUIRE(std::abs(strong_szego_scalar(phi)) < 1e-13);
    }
    SECTION("exp(az + b/z) gives ab") {
        BlockLoop phi = preset_exp_of(scalar_loop({{1, 0.5}, {-1, 0.5}}));
        REQUIRE(std::abs(strong_szego_scalar(phi) - cplx(0.25, 0.0)) < 1e-12);
    }
    SECTION("plane-wave tau series") {
        // phi = exp(-(t1 z + t2 z^2)) (1 + c/z): log D_inf = sum_k t_k (-c)^k
        double t1 = 1.0, t2 = 0.5, c = 0.3;
        BlockLoop g_inv = preset_exp_of(scalar_loop({{1, -t1}, {2, -t2}}));
        BlockLoop phi = multiply(g_inv, scalar_loop({{0, 1.0}, {-1, c}}));
        cplx expect(t1 * (-c) + t2 * (c * c), 0.0);
        REQUIRE(std::abs(strong_szego_scalar(phi) - expect) < 1e-12);
        REQUIRE(std::abs(expect - cplx(-0.255, 0.0)) < 1e-15);
    }
    SECTION("matrix symbols are refused") {
        REQUIRE_THROWS_AS(strong_szego_scalar(BlockLoop::identity(2)), NotScalar);
    }
    SECTION("agrees with the Hankel-product determinant on random scalars") {
        std::mt19937_64 rng(1212);
        std::uniform_real_distribution<double> u(-0.2, 0.2);
        for (int trial = 0; trial < 6; ++trial) {
            std::vector<std::pair<int, cplx>> entries{{0, 1.0}};
            for (int k = -4; k <= 4; ++k)
                if (k != 0) entries.emplace_back(k, cplx(u(rng), u(rng)) * 0.3);
            BlockLoop phi = scalar_loop(entries);
            cplx a = fredholm_det(phi, 16);
            cplx b = strong_szego_scalar(phi);
            REQUIRE(std::abs(a - b) <= 1e-9);
        }
    }
}

TEST_CASE("limit estimate agrees with the Fredholm route on random blocks") {
    std::mt19937_64 rng(77777);
    int done = 0;
    while (done < 4) {
        BlockLoop phi = add(BlockLoop::identity(2), random_band_loop(2, -2, 2, rng, 0.15));
        CircleGrid grid(128);
        try {
            if (winding_number(phi, grid) != 0) continue;
            LimitEstimate est = szego_widom_limit(phi, {8, 16, 32, 64});
            cplx f = fredholm_det(phi, 16);
            REQUIRE(std::abs(est.value - f) <= std::max(1e-8, 10.0 * est.extrapolated_error));
            ++done;
        } catch (const SingularAtNode&) {
            continue;
        }
    }
}

TEST_CASE("truncated operator-product cross-check") {
    // det(T_N(phi) T_N(phi^{-1})) approaches the product of the two
    // Hankel-regularized determinants as N grows (each factor separately
    // obeys the large-N limit and the geometric means cancel).
    BlockLoop phi = preset_exp_of(scalar_loop({{1, 0.4}, {-1, 0.3}}));
    BlockLoop inv = inverse_auto(phi, 1e-14);
    cplx target = fredholm_det(phi, 24) + fredholm_det(inv, 24);
    double prev = 1e300;
    for (int N : {16, 32, 64}) {
        Mat prod = toeplitz_matrix(phi, N) * toeplitz_matrix(inv, N);
        cplx v = log_det(prod);
        double err = std::abs(v - target);
        REQUIRE(err < std::max(prev * 1.2, 1e-10));
        prev = err;
    }
    REQUIRE(prev <= 1e-6);
}
