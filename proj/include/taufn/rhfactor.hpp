#pragma once

#include <functional>
#include <map>

#include "taufn/loops.hpp"

namespace taufn {

// Birkhoff data for J = Gminus^{-1} Gplus ... stored as Gplus = Gminus * J
// with Gminus = Id + (strictly negative part), so Gplus = Gminus J has
// nonnegative support up to the reported residual.
struct RHSolution {
    BlockLoop gamma_minus;
    BlockLoop gamma_plus;
    double residual = 0.0;   // sum over k<0 of ||(gamma_minus * J)_k||_HS
    int truncation = 0;      // negative-mode truncation order used
    double condition = 0.0;  // condition number of the least-squares system
};

// Solve p_minus(Gminus J) = 0 for Gminus = Id + sum_{m=1..P} X_m z^{-m}
// in the least-squares sense over every negative Fourier coefficient the
// truncated ansatz can reach.
inline RHSolution birkhoff_factorize(const BlockLoop& j_in, int p_order, const CircleGrid& grid,
                                     double cond_cap = 1e12) {
    if (p_order < 1) throw Error("birkhoff_factorize: truncation order must be >= 1");
    BlockLoop j = j_in.trimmed(0.0);
    int w = winding_number(j, grid);
    if (w != 0) throw NonzeroWinding("birkhoff_factorize: symbol determinant winds", w);
    int n = j.dim();
    // Equations (Gminus J)_k = 0 for k = kmin(J) - P .. -1; unknown row
    // block [X_1 .. X_P] multiplies from the left, so solve B^T X^T = C^T.
    int k_lo = j.k_min() - p_order;
    int n_eq = -k_lo;  // k = k_lo .. -1
    Mat b = Mat::Zero(n * p_order, n * n_eq);
    Mat c = Mat::Zero(n, n * n_eq);
    for (int k = k_lo; k <= -1; ++k) {
        int col = k - k_lo;
        for (int m = 1; m <= p_order; ++m)
            if (j.has(k + m)) b.block((m - 1) * n, col * n, n, n) = j.block(k + m);
        if (j.has(k)) c.block(0, col * n, n, n) = -j.block(k);
    }
    Eigen::BDCSVD<Mat> svd(b.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    double s_max = sv(0), s_min = sv(sv.size() - 1);
    double cond = s_min > 0.0 ? s_max / s_min : std::numeric_limits<double>::infinity();
    if (!(cond < cond_cap))
        throw SingularSystem("birkhoff_factorize: factorization system ill-conditioned", cond);
    Mat xt = svd.solve(c.transpose());

    RHSolution sol;
    sol.truncation = p_order;
    sol.condition = cond;
    sol.gamma_minus = BlockLoop(n, -p_order, 0);
    sol.gamma_minus.block(0) = Mat::Identity(n, n);
    for (int m = 1; m <= p_order; ++m)
        sol.gamma_minus.block(-m) = xt.middleRows((m - 1) * n, n).transpose();

    BlockLoop gj = sol.gamma_minus * j;
    double res = 0.0;
    for (int k = gj.k_min(); k <= -1; ++k) res += detail::hs_norm(gj.block(k));
    sol.residual = res;
    sol.gamma_plus = project(gj, Sign::plus);

    double j_scale = 0.0;
    for (int k = j.k_min(); k <= j.k_max(); ++k)
        j_scale = std::max(j_scale, detail::hs_norm(j.block(k)));
    if (res > 1e-6 * (1.0 + j_scale))
        throw NotConverged("birkhoff_factorize: negative-tail residual too large", p_order);
    return sol;
}

// The two factorizations of J^{-1} entering the Widom derivative:
// J^{-1} = Tplus Tminus = Sminus Splus with Tplus = Gplus^{-1},
// Tminus = Gminus, Sminus = gamma^{-1}, Splus = g.
struct DualFactorization {
    BlockLoop t_plus;
    BlockLoop t_minus;
    BlockLoop s_minus;
    BlockLoop s_plus;
    double residual_t = 0.0;  // sup over grid of ||Tplus Tminus - J^{-1}||
    double residual_s = 0.0;  // sup over grid of ||Sminus Splus - J^{-1}||
};

namespace detail {

inline BlockLoop slice(const BlockLoop& a, int lo, int hi) {
    lo = std::max(lo, a.k_min());
    hi = std::min(hi, a.k_max());
    if (lo > hi) return BlockLoop::zero(a.dim());
    BlockLoop r(a.dim(), lo, hi);
    for (int k = lo; k <= hi; ++k) r.block(k) = a.block(k);
    return r;
}

inline std::vector<Mat> inverse_samples(const std::vector<Mat>& vals, const char* who) {
    std::vector<Mat> out;
    out.reserve(vals.size());
    for (size_t m = 0; m < vals.size(); ++m) {
        Eigen::FullPivLU<Mat> lu(vals[m]);
        if (!lu.isInvertible())
            throw InverseFailed(std::string(who) + ": singular sample at node "
                                + std::to_string(m));
        out.push_back(lu.inverse());
    }
    return out;
}

} // namespace detail

inline DualFactorization dual_factorize(const BlockLoop& j, const RHSolution& sol,
                                        const BlockLoop& gamma, const std::vector<Mat>& g_vals,
                                        const CircleGrid& grid, double tail_tol = 1e-14) {
    DualFactorization d;
    std::vector<Mat> j_inv;
    try {
        j_inv = detail::inverse_samples(sample(j, grid), "dual_factorize[J]");
        d.t_plus = detail::slice(
            loop_from_samples_auto(detail::inverse_samples(sample(sol.gamma_plus, grid),
                                                           "dual_factorize[Gplus]"),
                                   grid, tail_tol),
            0, grid.size());
        d.s_minus = detail::slice(
            loop_from_samples_auto(detail::inverse_samples(sample(gamma, grid),
                                                           "dual_factorize[gamma]"),
                                   grid, tail_tol),
            -grid.size(), 0);
    } catch (const TailNotConverged& e) {
        throw InverseFailed(std::string("dual_factorize: ") + e.what());
    }
    d.t_minus = sol.gamma_minus;
    d.s_plus = detail::slice(loop_from_samples_auto(g_vals, grid, tail_tol), 0, grid.size());

    std::vector<Mat> tp = sample(d.t_plus, grid), tm = sample(d.t_minus, grid);
    std::vector<Mat> sm = sample(d.s_minus, grid), sp = sample(d.s_plus, grid);
    for (int m = 0; m < grid.size(); ++m) {
        size_t i = static_cast<size_t>(m);
        d.residual_t = std::max(d.residual_t, detail::max_abs(Mat(tp[i] * tm[i] - j_inv[i])));
        d.residual_s = std::max(d.residual_s, detail::max_abs(Mat(sm[i] * sp[i] - j_inv[i])));
    }
    return d;
}

// d/dt log tau = (1/2 pi i) contour integral of
// Tr( Gminus^{-1} dGminus/dz * dJ/dt * J^{-1} ) dz.
inline cplx malgrange_jmu_logderiv(const RHSolution& sol, const BlockLoop& j,
                                   const BlockLoop& dj_dt, const CircleGrid& grid) {
    std::vector<Mat> gm = sample(sol.gamma_minus, grid);
    std::vector<Mat> gmp = sample(z_derivative(sol.gamma_minus), grid);
    std::vector<Mat> jv = sample(j, grid);
    std::vector<Mat> dj = sample(dj_dt, grid);
    std::vector<Mat> vals(static_cast<size_t>(grid.size()));
    for (int m = 0; m < grid.size(); ++m) {
        size_t i = static_cast<size_t>(m);
        Eigen::FullPivLU<Mat> lu_g(gm[i]);
        Eigen::FullPivLU<Mat> lu_j(jv[i]);
        if (!lu_g.isInvertible() || !lu_j.isInvertible())
            throw InverseFailed("malgrange_jmu_logderiv: singular sample at node "
                                + std::to_string(m));
        vals[i] = lu_g.solve(gmp[i]) * dj[i] * lu_j.inverse();
    }
    return contour_trace_integral(vals, grid);
}

// Widom's derivative of the operator determinant:
// d/dt log det = -(1/2 pi i) contour integral of
// Tr( (dTplus/dz Tminus - dSminus/dz Splus) dphi/dt ) dz.
inline cplx widom_derivative(const DualFactorization& d, const BlockLoop& dphi_dt,
                             const CircleGrid& grid) {
    std::vector<Mat> tpz = sample(z_derivative(d.t_plus), grid);
    std::vector<Mat> tm = sample(d.t_minus, grid);
    std::vector<Mat> smz = sample(z_derivative(d.s_minus), grid);
    std::vector<Mat> sp = sample(d.s_plus, grid);
    std::vector<Mat> dp = sample(dphi_dt, grid);
    std::vector<Mat> vals(static_cast<size_t>(grid.size()));
    for (int m = 0; m < grid.size(); ++m) {
        size_t i = static_cast<size_t>(m);
        vals[i] = (tpz[i] * tm[i] - smz[i] * sp[i]) * dp[i];
    }
    return -contour_trace_integral(vals, grid);
}

// A family of jump symbols over flow times, with analytic time derivative.
struct JumpFamily {
    std::function<BlockLoop(const std::map<int, double>&)> jump_at;
    std::function<BlockLoop(const BlockLoop&, int)> flow_derivative;  // dJ/dt_j from J
    std::map<int, double> base_times;
    int truncation = 24;
    int grid_m = 256;
};

// Antisymmetry defect of the Malgrange one-form:
// | d/dt_{j2} omega_{j1} - d/dt_{j1} omega_{j2} | by central differences.
inline double closedness_residual(const JumpFamily& fam, int j1, int j2, double h) {
    CircleGrid grid(fam.grid_m);
    auto omega = [&](int jflow, int jshift, double shift) {
        std::map<int, double> t = fam.base_times;
        t[jshift] += shift;
        BlockLoop j = fam.jump_at(t);
        RHSolution sol = birkhoff_factorize(j, fam.truncation, grid);
        return malgrange_jmu_logderiv(sol, j, fam.flow_derivative(j, jflow), grid);
    };
    cplx d12 = (omega(j1, j2, h) - omega(j1, j2, -h)) / (2.0 * h);
    cplx d21 = (omega(j2, j1, h) - omega(j2, j1, -h)) / (2.0 * h);
    return std::abs(d12 - d21);
}

} // namespace taufn
