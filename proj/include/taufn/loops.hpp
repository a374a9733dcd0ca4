#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "taufn/errors.hpp"

namespace taufn {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

namespace detail {

inline int next_pow2(int m) {
    int p = 1;
    while (p < m) p <<= 1;
    return p;
}

inline double max_abs(const Mat& a) {
    return a.cwiseAbs().maxCoeff();
}

inline double hs_norm(const Mat& a) {
    return a.norm();
}

inline double spectral_norm(const Mat& a) {
    if (a.rows() == 1 && a.cols() == 1) return std::abs(a(0, 0));
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

inline Mat expm(const Mat& a) {
    return a.exp();
}

} // namespace detail

// Matrix-valued Laurent polynomial sum_{k=kmin..kmax} c_k z^k with n x n
// complex blocks.  The stored range is the declared support; query outside
// it returns zero.
class BlockLoop {
public:
    // Truncation tolerance this loop was produced under; 0 for exact data.
    double tail_tol = 0.0;

    BlockLoop() : n_(0), kmin_(0), kmax_(-1) {}

    BlockLoop(int n, int kmin, int kmax) : n_(n), kmin_(kmin), kmax_(kmax) {
        if (n <= 0 || kmax < kmin) throw Error("BlockLoop: bad shape");
        coeffs_.assign(static_cast<size_t>(kmax - kmin + 1), Mat::Zero(n, n));
    }

    static BlockLoop identity(int n) {
        BlockLoop r(n, 0, 0);
        r.block(0) = Mat::Identity(n, n);
        return r;
    }

    static BlockLoop zero(int n) { return BlockLoop(n, 0, 0); }

    static BlockLoop monomial(int k, const Mat& a) {
        if (a.rows() != a.cols() || a.rows() == 0)
            throw DimensionMismatch("monomial: block must be square");
        BlockLoop r(static_cast<int>(a.rows()), k, k);
        r.block(k) = a;
        return r;
    }

    static BlockLoop from_coeffs(int n, const std::vector<std::pair<int, Mat>>& entries) {
        if (entries.empty()) return zero(n);
        int kmin = entries.front().first, kmax = kmin;
        for (const auto& [k, m] : entries) {
            if (m.rows() != n || m.cols() != n)
                throw DimensionMismatch("from_coeffs: block size mismatch");
            kmin = std::min(kmin, k);
            kmax = std::max(kmax, k);
        }
        BlockLoop r(n, kmin, kmax);
        for (const auto& [k, m] : entries) r.block(k) += m;
        return r;
    }

    int dim() const { return n_; }
    int k_min() const { return kmin_; }
    int k_max() const { return kmax_; }
    bool has(int k) const { return k >= kmin_ && k <= kmax_; }

    const Mat& block(int k) const {
        if (!has(k)) throw Error("BlockLoop::block: index out of stored range");
        return coeffs_[static_cast<size_t>(k - kmin_)];
    }
    Mat& block(int k) {
        if (!has(k)) throw Error("BlockLoop::block: index out of stored range");
        return coeffs_[static_cast<size_t>(k - kmin_)];
    }

    // Coefficient with zero extension outside the stored range.
    Mat coeff(int k) const {
        if (has(k)) return block(k);
        return Mat::Zero(n_, n_);
    }

    // Drop margin blocks whose entries are all <= tol in absolute value.
    // A loop that vanishes entirely collapses to a single zero block at k=0.
    BlockLoop trimmed(double tol = 0.0) const {
        int lo = kmin_, hi = kmax_;
        while (lo <= hi && detail::max_abs(block(lo)) <= tol) ++lo;
        while (hi >= lo && detail::max_abs(block(hi)) <= tol) --hi;
        if (lo > hi) return zero(n_);
        BlockLoop r(n_, lo, hi);
        for (int k = lo; k <= hi; ++k) r.block(k) = block(k);
        r.tail_tol = std::max(tail_tol, tol);
        return r;
    }

    // Largest |k| carrying a coefficient above tol.
    int bandwidth(double tol = 0.0) const {
        BlockLoop t = trimmed(tol);
        return std::max({-t.k_min(), t.k_max(), 0});
    }

private:
    int n_, kmin_, kmax_;
    std::vector<Mat> coeffs_;
};

// Uniform grid of M-th roots of unity, M a power of two.
class CircleGrid {
public:
    explicit CircleGrid(int m) : M_(m) {
        if (m < 4 || (m & (m - 1)) != 0) throw Error("CircleGrid: M must be a power of two >= 4");
        nodes_.resize(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) {
            double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(m);
            nodes_[static_cast<size_t>(i)] = cplx(std::cos(th), std::sin(th));
        }
    }

    // Smallest power of two >= 4*bw + 16; resolves products of symbols with
    // combined bandwidth up to roughly 2*bw without aliasing.
    static CircleGrid for_bandwidth(int bw) {
        return CircleGrid(detail::next_pow2(4 * std::max(bw, 0) + 16));
    }

    int size() const { return M_; }
    cplx node(int m) const { return nodes_[static_cast<size_t>(m)]; }
    // Exact power z_m^j by index arithmetic on the root-of-unity table.
    cplx power(int m, long long j) const {
        long long idx = (static_cast<long long>(m) * j) % M_;
        if (idx < 0) idx += M_;
        return nodes_[static_cast<size_t>(idx)];
    }

private:
    int M_;
    std::vector<cplx> nodes_;
};

inline Mat eval(const BlockLoop& a, cplx z) {
    if (z == cplx(0.0, 0.0) && a.k_min() < 0)
        throw ZeroArgument("eval: loop with negative support evaluated at z=0");
    // Horner over the stored range.
    Mat r = a.block(a.k_max());
    for (int k = a.k_max() - 1; k >= a.k_min(); --k) r = r * z + a.block(k);
    if (a.k_min() != 0) {
        cplx zp = std::pow(z, static_cast<double>(a.k_min()));
        r *= zp;
    }
    return r;
}

inline std::vector<Mat> sample(const BlockLoop& a, const CircleGrid& grid) {
    std::vector<Mat> out;
    out.reserve(static_cast<size_t>(grid.size()));
    int n = a.dim();
    for (int m = 0; m < grid.size(); ++m) {
        Mat v = Mat::Zero(n, n);
        for (int k = a.k_min(); k <= a.k_max(); ++k) v += a.block(k) * grid.power(m, k);
        out.push_back(std::move(v));
    }
    return out;
}

inline BlockLoop add(const BlockLoop& a, const BlockLoop& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("add: block size mismatch");
    int kmin = std::min(a.k_min(), b.k_min()), kmax = std::max(a.k_max(), b.k_max());
    BlockLoop r(a.dim(), kmin, kmax);
    for (int k = kmin; k <= kmax; ++k) r.block(k) = a.coeff(k) + b.coeff(k);
    return r;
}

inline BlockLoop scale(const BlockLoop& a, cplx s) {
    BlockLoop r = a;
    for (int k = r.k_min(); k <= r.k_max(); ++k) r.block(k) *= s;
    return r;
}

// Coefficient convolution; exact for exact inputs.
inline BlockLoop multiply(const BlockLoop& a, const BlockLoop& b) {
    if (a.dim() != b.dim()) throw DimensionMismatch("multiply: block size mismatch");
    BlockLoop r(a.dim(), a.k_min() + b.k_min(), a.k_max() + b.k_max());
    for (int i = a.k_min(); i <= a.k_max(); ++i)
        for (int j = b.k_min(); j <= b.k_max(); ++j)
            r.block(i + j) += a.block(i) * b.block(j);
    return r;
}

inline BlockLoop operator*(const BlockLoop& a, const BlockLoop& b) { return multiply(a, b); }
inline BlockLoop operator+(const BlockLoop& a, const BlockLoop& b) { return add(a, b); }
inline BlockLoop operator-(const BlockLoop& a, const BlockLoop& b) { return add(a, scale(b, -1.0)); }

// Shift z^s * a.
inline BlockLoop z_shift(const BlockLoop& a, int s) {
    BlockLoop r(a.dim(), a.k_min() + s, a.k_max() + s);
    for (int k = a.k_min(); k <= a.k_max(); ++k) r.block(k + s) = a.block(k);
    return r;
}

inline BlockLoop z_derivative(const BlockLoop& a) {
    if (a.k_min() == 0 && a.k_max() == 0) return BlockLoop::zero(a.dim());
    BlockLoop r(a.dim(), a.k_min() - 1, a.k_max() - 1);
    for (int k = a.k_min(); k <= a.k_max(); ++k)
        r.block(k - 1) = a.block(k) * static_cast<double>(k);
    return r.trimmed();
}

enum class Sign { plus, minus };

// p_plus keeps k >= 0, p_minus keeps k < 0.
inline BlockLoop project(const BlockLoop& a, Sign s) {
    int lo, hi;
    if (s == Sign::plus) {
        lo = std::max(a.k_min(), 0);
        hi = a.k_max();
    } else {
        lo = a.k_min();
        hi = std::min(a.k_max(), -1);
    }
    if (lo > hi) return BlockLoop::zero(a.dim());
    BlockLoop r(a.dim(), lo, hi);
    for (int k = lo; k <= hi; ++k) r.block(k) = a.block(k);
    return r;
}

// Direct DFT of nodewise values onto a prescribed coefficient range.
inline BlockLoop loop_from_samples(const std::vector<Mat>& values, const CircleGrid& grid,
                                   int kmin, int kmax) {
    if (values.size() != static_cast<size_t>(grid.size()))
        throw DimensionMismatch("loop_from_samples: sample count != grid size");
    int n = static_cast<int>(values.front().rows());
    BlockLoop r(n, kmin, kmax);
    double invM = 1.0 / static_cast<double>(grid.size());
    for (int k = kmin; k <= kmax; ++k) {
        Mat c = Mat::Zero(n, n);
        for (int m = 0; m < grid.size(); ++m) c += values[static_cast<size_t>(m)] * grid.power(m, -k);
        r.block(k) = c * invM;
    }
    return r;
}

// DFT with automatic support detection.  The support is the largest |k|
// with a coefficient above tail_tol; three consecutive coefficients beyond
// each margin must fall below tail_tol inside the resolvable range
// [-M/2+1, M/2-1], otherwise the grid cannot certify the truncation.
// The Hilbert-Schmidt mass of the dropped coefficients is reported through
// `discarded` when requested.
inline BlockLoop loop_from_samples_auto(const std::vector<Mat>& values, const CircleGrid& grid,
                                        double tail_tol = 1e-14, double* discarded = nullptr) {
    int M = grid.size();
    int khi = M / 2 - 1, klo = -M / 2 + 1;
    BlockLoop full = loop_from_samples(values, grid, klo, khi);
    int lo = khi + 1, hi = klo - 1;
    for (int k = klo; k <= khi; ++k) {
        if (detail::max_abs(full.block(k)) >= tail_tol) {
            lo = std::min(lo, k);
            hi = std::max(hi, k);
        }
    }
    if (lo > hi) {
        if (discarded) *discarded = 0.0;
        BlockLoop z = BlockLoop::zero(static_cast<int>(values.front().rows()));
        z.tail_tol = tail_tol;
        return z;
    }
    if (hi + 3 > khi || lo - 3 < klo)
        throw TailNotConverged("loop_from_samples_auto: support reaches grid Nyquist range");
    BlockLoop r(full.dim(), lo, hi);
    for (int k = lo; k <= hi; ++k) r.block(k) = full.block(k);
    r.tail_tol = tail_tol;
    if (discarded) {
        double mass = 0.0;
        for (int k = klo; k <= khi; ++k)
            if (k < lo || k > hi) mass += detail::hs_norm(full.block(k));
        *discarded = mass;
    }
    return r;
}

// Nodewise inverse transformed back to coefficients with tail detection.
inline BlockLoop inverse(const BlockLoop& a, const CircleGrid& grid, double tail_tol = 1e-14,
                         double* discarded = nullptr) {
    std::vector<Mat> vals = sample(a, grid);
    std::vector<Mat> inv;
    inv.reserve(vals.size());
    for (int m = 0; m < grid.size(); ++m) {
        Eigen::FullPivLU<Mat> lu(vals[static_cast<size_t>(m)]);
        if (!lu.isInvertible())
            throw SingularAtNode("inverse: singular sample", m);
        inv.push_back(lu.inverse());
    }
    return loop_from_samples_auto(inv, grid, tail_tol, discarded);
}

namespace detail {

// Unwrapped arguments of det a along the grid, plus the winding integer.
struct DetPhase {
    std::vector<cplx> dets;
    std::vector<double> args;   // continuous along the grid, args[0] principal
    int winding;
};

inline DetPhase det_phase(const BlockLoop& a, const CircleGrid& grid) {
    DetPhase r;
    int M = grid.size();
    r.dets.resize(static_cast<size_t>(M));
    std::vector<Mat> vals = sample(a, grid);
    for (int m = 0; m < M; ++m) {
        cplx d = vals[static_cast<size_t>(m)].determinant();
        if (!std::isfinite(d.real()) || !std::isfinite(d.imag()) || std::abs(d) == 0.0)
            throw SingularAtNode("det_phase: vanishing determinant sample", m);
        r.dets[static_cast<size_t>(m)] = d;
    }
    r.args.resize(static_cast<size_t>(M));
    r.args[0] = std::arg(r.dets[0]);
    double total = 0.0;
    for (int m = 0; m < M; ++m) {
        int next = (m + 1) % M;
        double jump = std::arg(r.dets[static_cast<size_t>(next)] / r.dets[static_cast<size_t>(m)]);
        if (std::abs(jump) > 0.9 * std::numbers::pi)
            throw PhaseJumpTooLarge("det_phase: phase jump exceeds 0.9*pi between nodes");
        total += jump;
        if (next != 0) r.args[static_cast<size_t>(next)] = r.args[static_cast<size_t>(m)] + jump;
    }
    double w = total / (2.0 * std::numbers::pi);
    long wr = std::lround(w);
    if (std::abs(w - static_cast<double>(wr)) > 0.05)
        throw PhaseJumpTooLarge("det_phase: accumulated phase far from an integer multiple of 2*pi");
    r.winding = static_cast<int>(wr);
    return r;
}

} // namespace detail

inline int winding_number(const BlockLoop& a, const CircleGrid& grid) {
    return detail::det_phase(a, grid).winding;
}

// log G(phi) = circle mean of log det phi, branch continuous along the grid
// starting from the principal value at z = 1.  Requires winding zero.
inline cplx geometric_mean_log(const BlockLoop& a, const CircleGrid& grid) {
    detail::DetPhase ph = detail::det_phase(a, grid);
    if (ph.winding != 0)
        throw NonzeroWinding("geometric_mean_log: winding must vanish", ph.winding);
    cplx acc(0.0, 0.0);
    for (int m = 0; m < grid.size(); ++m)
        acc += cplx(std::log(std::abs(ph.dets[static_cast<size_t>(m)])), ph.args[static_cast<size_t>(m)]);
    return acc / static_cast<double>(grid.size());
}

inline cplx geometric_mean(const BlockLoop& a, const CircleGrid& grid) {
    return std::exp(geometric_mean_log(a, grid));
}

// (1/2*pi*i) * contour integral of Tr F(z) dz from nodewise values;
// exact for band-limited F resolved by the grid.
inline cplx contour_trace_integral(const std::vector<Mat>& values, const CircleGrid& grid) {
    if (values.size() != static_cast<size_t>(grid.size()))
        throw DimensionMismatch("contour_trace_integral: sample count != grid size");
    cplx acc(0.0, 0.0);
    for (int m = 0; m < grid.size(); ++m)
        acc += values[static_cast<size_t>(m)].trace() * grid.node(m);
    return acc / static_cast<double>(grid.size());
}

// Sup over grid nodes of the matrix 2-norm.
inline double sup_norm(const BlockLoop& a, const CircleGrid& grid) {
    double r = 0.0;
    for (const Mat& v : sample(a, grid)) r = std::max(r, detail::spectral_norm(v));
    return r;
}

// Sobolev-type half norm sqrt(sum_k |k| * ||c_k||_HS^2).
inline double l_half_norm(const BlockLoop& a) {
    double s = 0.0;
    for (int k = a.k_min(); k <= a.k_max(); ++k) {
        double h = detail::hs_norm(a.block(k));
        s += std::abs(static_cast<double>(k)) * h * h;
    }
    return std::sqrt(s);
}

// Inverse with automatic grid enlargement until the Fourier tail of the
// inverse is certified below tail_tol.
inline BlockLoop inverse_auto(const BlockLoop& a, double tail_tol = 1e-14, int m_start = 0,
                              double* discarded = nullptr) {
    int m = m_start > 0 ? detail::next_pow2(m_start)
                        : CircleGrid::for_bandwidth(a.bandwidth()).size();
    for (;;) {
        try {
            return inverse(a, CircleGrid(m), tail_tol, discarded);
        } catch (const TailNotConverged&) {
            if (m >= 16384) throw;
            m *= 2;
        }
    }
}

// ---- presets -------------------------------------------------------------

inline BlockLoop preset_identity(int n) { return BlockLoop::identity(n); }

// Scalar symbol 1 + c/(z - a), |a| < 1.  For a = 0 the support is exactly
// {-1, 0}; otherwise the geometric expansion is truncated after `depth`
// terms (depth <= 0 selects the first term below 1e-16, capped at 512).
inline BlockLoop preset_one_pole(cplx c, cplx a = cplx(0.0, 0.0), int depth = 0) {
    if (std::abs(a) >= 1.0) throw Error("preset_one_pole: pole must lie inside the unit disc");
    if (a == cplx(0.0, 0.0)) {
        BlockLoop r(1, -1, 0);
        r.block(0)(0, 0) = 1.0;
        r.block(-1)(0, 0) = c;
        return r;
    }
    int d = depth;
    if (d <= 0) {
        d = 1;
        double t = std::abs(c);
        while (t >= 1e-16 && d < 512) {
            t *= std::abs(a);
            ++d;
        }
    }
    BlockLoop r(1, -d, 0);
    r.block(0)(0, 0) = 1.0;
    cplx term = c;
    for (int m = 1; m <= d; ++m) {
        r.block(-m)(0, 0) = term;
        term *= a;
    }
    return r;
}

// exp of a matrix Laurent polynomial, computed nodewise and transformed
// back; the grid is enlarged until the Fourier tail certifies truncation.
inline BlockLoop preset_exp_of(const BlockLoop& x, double tail_tol = 1e-14) {
    int bw = x.bandwidth();
    int m = detail::next_pow2(std::max(64, 8 * (bw + 1)));
    for (;;) {
        CircleGrid grid(m);
        std::vector<Mat> vals = sample(x, grid);
        for (Mat& v : vals) v = detail::expm(v);
        try {
            return loop_from_samples_auto(vals, grid, tail_tol);
        } catch (const TailNotConverged&) {
            if (m >= 16384) throw;
            m *= 2;
        }
    }
}

} // namespace taufn
