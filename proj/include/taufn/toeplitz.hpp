#pragma once

#include <limits>
#include <vector>

#include "taufn/loops.hpp"

namespace taufn {

// Finite section T_N(phi): (N+1) x (N+1) blocks, entry (j,k) = phi_{j-k}.
struct BlockToeplitzFinite {
    BlockLoop symbol;
    int N = 0;
    Mat data;
};

inline Mat toeplitz_matrix(const BlockLoop& phi, int n_trunc) {
    if (n_trunc < 0) throw Error("toeplitz_matrix: N must be >= 0");
    int n = phi.dim();
    int dim = (n_trunc + 1) * n;
    Mat t = Mat::Zero(dim, dim);
    for (int j = 0; j <= n_trunc; ++j)
        for (int k = 0; k <= n_trunc; ++k)
            if (phi.has(j - k)) t.block(j * n, k * n, n, n) = phi.block(j - k);
    return t;
}

inline BlockToeplitzFinite assemble_toeplitz(const BlockLoop& phi, int n_trunc) {
    return BlockToeplitzFinite{phi, n_trunc, toeplitz_matrix(phi, n_trunc)};
}

// Hankel sections: H(phi)_{jk} = phi_{j+k+1}, Ht(phi)_{jk} = phi_{-j-k-1},
// block indices 0..m-1.  Both have finite rank for band-limited symbols.
inline Mat hankel_matrix(const BlockLoop& phi, int m) {
    int n = phi.dim();
    Mat h = Mat::Zero(m * n, m * n);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            if (phi.has(j + k + 1)) h.block(j * n, k * n, n, n) = phi.block(j + k + 1);
    return h;
}

inline Mat hankel_tilde_matrix(const BlockLoop& phi, int m) {
    int n = phi.dim();
    Mat h = Mat::Zero(m * n, m * n);
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k)
            if (phi.has(-j - k - 1)) h.block(j * n, k * n, n, n) = phi.block(-j - k - 1);
    return h;
}

struct HankelTruncation {
    BlockLoop symbol;
    int m = 0;
    Mat h;        // H(phi)
    Mat h_tilde;  // Ht(phi)
};

inline HankelTruncation assemble_hankel(const BlockLoop& phi, int m) {
    return HankelTruncation{phi, m, hankel_matrix(phi, m), hankel_tilde_matrix(phi, m)};
}

inline cplx log_det_sentinel() {
    return cplx(-std::numeric_limits<double>::infinity(), 0.0);
}

inline bool is_log_det_sentinel(cplx v) {
    return v.real() == -std::numeric_limits<double>::infinity();
}

// log det by LU with the phase accumulated factor by factor, so the value
// stays finite where the determinant itself would overflow.  A vanishing
// pivot yields the -inf sentinel instead of an exception.
inline cplx log_det(const Mat& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("log_det: matrix must be square");
    if (a.rows() == 0) return cplx(0.0, 0.0);
    Eigen::PartialPivLU<Mat> lu(a);
    cplx acc(0.0, 0.0);
    auto diag = lu.matrixLU().diagonal();
    for (Eigen::Index i = 0; i < diag.size(); ++i) {
        cplx u = diag(i);
        if (!std::isfinite(u.real()) || !std::isfinite(u.imag()) || u == cplx(0.0, 0.0))
            return log_det_sentinel();
        acc += std::log(u);
    }
    if (lu.permutationP().determinant() < 0) acc += cplx(0.0, std::numbers::pi);
    return acc;
}

inline cplx log_det_DN(const BlockLoop& phi, int n_trunc) {
    return log_det(toeplitz_matrix(phi, n_trunc));
}

// Finite-section defect of T(a)T(b) = T(ab) - H(a)Ht(b): max entry error over
// block rows 0..N-B, B the sum of the two bandwidths.  Those rows of the
// truncated products coincide with the operator product exactly, so the
// residual measures floating-point error only.
inline double identity_residual(const BlockLoop& a, const BlockLoop& b, int n_trunc) {
    if (a.dim() != b.dim()) throw DimensionMismatch("identity_residual: block size mismatch");
    int bsum = a.bandwidth() + b.bandwidth();
    int w = n_trunc - bsum;
    if (w < 0) throw WindowEmpty("identity_residual: N does not exceed the combined bandwidth");
    int n = a.dim();
    Mat lhs = toeplitz_matrix(a, n_trunc) * toeplitz_matrix(b, n_trunc);
    Mat rhs = toeplitz_matrix(a * b, n_trunc)
            - hankel_matrix(a, n_trunc + 1).topLeftCorner((n_trunc + 1) * n, (n_trunc + 1) * n)
              * hankel_tilde_matrix(b, n_trunc + 1).topLeftCorner((n_trunc + 1) * n, (n_trunc + 1) * n);
    Mat diff = lhs - rhs;
    return diff.topRows((w + 1) * n).cwiseAbs().maxCoeff();
}

// log det(Id - H(phi) Ht(phi^{-1})), the operator-determinant value of the
// Szego-Widom limit.  The truncation m is doubled until two sections eight
// apart agree to 1e-10; band-limited inputs stabilize as soon as both
// Hankel factors are fully captured.
inline cplx fredholm_det(const BlockLoop& phi, int m_start, double tail_tol = 1e-14) {
    BlockLoop phi_inv = inverse_auto(phi, tail_tol);
    int floor_m = std::max({1, phi.k_max(), -phi_inv.k_min()});
    int m = std::max(m_start, floor_m);
    const int cap = 4096;
    auto value_at = [&](int mm) {
        int dim = mm * phi.dim();
        Mat k = Mat::Identity(dim, dim)
              - hankel_matrix(phi, mm) * hankel_tilde_matrix(phi_inv, mm);
        return log_det(k);
    };
    cplx v1 = value_at(m);
    for (;;) {
        cplx v2 = value_at(m + 8);
        if (is_log_det_sentinel(v1) && is_log_det_sentinel(v2)) return v2;
        if (!is_log_det_sentinel(v1) && !is_log_det_sentinel(v2) && std::abs(v1 - v2) <= 1e-10)
            return v2;
        if (2 * m > cap)
            throw NotConverged("fredholm_det: Hankel truncation did not stabilize", m);
        m *= 2;
        v1 = value_at(m);
    }
}

struct LimitEstimate {
    cplx value = cplx(0.0, 0.0);
    std::vector<int> schedule;          // N values that produced finite entries
    std::vector<cplx> normalized;       // log D_N - (N+1) log G
    double extrapolated_error = std::numeric_limits<double>::infinity();
    int skipped = 0;                    // schedule entries dropped at a zero of D_N
};

// Normalized determinant sequence along the schedule with Aitken
// extrapolation on the last three finite entries.
inline LimitEstimate szego_widom_limit(const BlockLoop& phi, const std::vector<int>& schedule,
                                       double tail_tol = 1e-14) {
    if (schedule.empty()) throw Error("szego_widom_limit: empty schedule");
    for (size_t i = 1; i < schedule.size(); ++i)
        if (schedule[i] <= schedule[i - 1])
            throw Error("szego_widom_limit: schedule must be strictly increasing");
    CircleGrid grid = CircleGrid::for_bandwidth(phi.bandwidth(tail_tol));
    cplx log_g = geometric_mean_log(phi, grid);
    LimitEstimate est;
    for (int n_trunc : schedule) {
        cplx d = log_det_DN(phi, n_trunc);
        if (is_log_det_sentinel(d)) {
            ++est.skipped;
            continue;
        }
        est.schedule.push_back(n_trunc);
        // log_det fixes no branch: summed per-pivot principal logs leave an
        // N-dependent multiple of 2*pi*i. Only det D_N is observable, so the
        // normalized value is reduced to the principal strip.
        cplx nv = d - static_cast<double>(n_trunc + 1) * log_g;
        est.normalized.push_back(cplx(nv.real(), std::remainder(nv.imag(), 2.0 * std::numbers::pi)));
    }
    if (est.normalized.empty())
        throw NotConverged("szego_widom_limit: every section hit a determinant zero", 0);
    size_t sz = est.normalized.size();
    est.value = est.normalized.back();
    if (sz >= 2) {
        cplx d_last = est.normalized[sz - 1] - est.normalized[sz - 2];
        est.extrapolated_error = std::abs(d_last);
        if (sz >= 3) {
            cplx d_prev = est.normalized[sz - 2] - est.normalized[sz - 3];
            if (std::abs(d_last) > 2.0 * std::abs(d_prev) && std::abs(d_last) > 1e-7)
                throw DivergenceDetected("szego_widom_limit: normalized sequence is growing");
            cplx den = d_last - d_prev;
            if (std::abs(den) > 64.0 * std::numeric_limits<double>::epsilon()
                                  * (std::abs(d_last) + std::abs(d_prev))) {
                cplx extro = est.normalized[sz - 1] - d_last * d_last / den;
                est.extrapolated_error = std::abs(extro - est.value);
                est.value = extro;
            }
        }
    }
    return est;
}

// Scalar strong Szego series log D_inf = sum_{k>=1} k s_k s_{-k}, with s_k
// the Fourier coefficients of the unwrapped logarithm of the symbol.
inline cplx strong_szego_scalar(const BlockLoop& phi, int grid_m = 0) {
    if (phi.dim() != 1) throw NotScalar("strong_szego_scalar: symbol must be scalar");
    CircleGrid grid = grid_m > 0 ? CircleGrid(detail::next_pow2(grid_m))
                                 : CircleGrid::for_bandwidth(std::max(phi.bandwidth(), 8) * 4);
    detail::DetPhase ph = detail::det_phase(phi, grid);
    if (ph.winding != 0)
        throw NonzeroWinding("strong_szego_scalar: winding must vanish", ph.winding);
    int m_sz = grid.size();
    std::vector<cplx> logs(static_cast<size_t>(m_sz));
    for (int m = 0; m < m_sz; ++m)
        logs[static_cast<size_t>(m)] = cplx(std::log(std::abs(ph.dets[static_cast<size_t>(m)])),
                                            ph.args[static_cast<size_t>(m)]);
    auto s_coeff = [&](int k) {
        cplx acc(0.0, 0.0);
        for (int m = 0; m < m_sz; ++m) acc += logs[static_cast<size_t>(m)] * grid.power(m, -k);
        return acc / static_cast<double>(m_sz);
    };
    cplx sum(0.0, 0.0);
    int quiet = 0;
    for (int k = 1; k <= m_sz / 2 - 1; ++k) {
        cplx term = static_cast<double>(k) * s_coeff(k) * s_coeff(-k);
        sum += term;
        quiet = std::abs(term) < 1e-16 ? quiet + 1 : 0;
        if (quiet >= 3) break;
    }
    return sum;
}

} // namespace taufn
