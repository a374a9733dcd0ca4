#pragma once

#include <map>
#include <string>

#include "taufn/rhfactor.hpp"
#include "taufn/toeplitz.hpp"
#include "taufn/util.hpp"

namespace taufn {

// A point of the restricted Grassmannian in big-cell normal form:
// gamma has support k <= 0 and gamma_0 = Id.  The constructor snaps
// roundoff below 1e-12 to the exact normal form and rejects anything
// genuinely outside it.
struct GrassmannPoint {
    BlockLoop gamma;
    std::string label;

    explicit GrassmannPoint(BlockLoop g, std::string name = "")
        : gamma(std::move(g)), label(std::move(name)) {
        gamma = gamma.trimmed(0.0);
        int n = gamma.dim();
        for (int k = 1; k <= gamma.k_max(); ++k)
            if (detail::max_abs(gamma.block(k)) > 1e-12)
                throw Error("GrassmannPoint: positive Fourier modes present");
        gamma = detail::slice(gamma, gamma.k_min(), 0);
        if (!gamma.has(0) || detail::max_abs(Mat(gamma.block(0) - Mat::Identity(n, n))) > 1e-12)
            throw Error("GrassmannPoint: constant term is not the identity");
        gamma.block(0) = Mat::Identity(n, n);
    }

    int dim() const { return gamma.dim(); }
};

// Commuting one-parameter flow group g(t; z) = exp(sum_j t_j G_j(z)).
// Generators must commute pointwise on the circle; times carry real values
// here, with a complex-time evaluation hook used by the Sato shift.
class FlowGroupElement {
public:
    FlowGroupElement(int n, std::vector<std::pair<int, BlockLoop>> generators,
                     std::map<int, double> times, int preferred_grid_m = 256)
        : n_(n), gens_(std::move(generators)), times_(std::move(times)),
          preferred_m_(detail::next_pow2(std::max(preferred_grid_m, 64))) {
        for (const auto& [j, g] : gens_) {
            if (j < 1) throw Error("FlowGroupElement: generator index must be >= 1");
            if (g.dim() != n_) throw DimensionMismatch("FlowGroupElement: generator block size");
            for (const auto& [j2, g2] : gens_) {
                if (j2 <= j) continue;
                BlockLoop comm = g * g2 - g2 * g;
                double scale = 1.0;
                for (int k = comm.k_min(); k <= comm.k_max(); ++k)
                    if (detail::max_abs(comm.block(k)) > 1e-12 * scale)
                        throw Error("FlowGroupElement: generators do not commute");
            }
        }
        for (const auto& [j, v] : times_) {
            (void)v;
            generator(j);  // every timed flow needs its generator
        }
    }

    int dim() const { return n_; }
    int preferred_grid_m() const { return preferred_m_; }
    const std::map<int, double>& times() const { return times_; }
    const std::vector<std::pair<int, BlockLoop>>& generators() const { return gens_; }

    const BlockLoop& generator(int j) const {
        for (const auto& [idx, g] : gens_)
            if (idx == j) return g;
        throw Error("FlowGroupElement: no generator with index " + std::to_string(j));
    }

    double time(int j) const {
        auto it = times_.find(j);
        return it == times_.end() ? 0.0 : it->second;
    }

    FlowGroupElement with_time(int j, double v) const {
        FlowGroupElement r = *this;
        r.times_[j] = v;
        return r;
    }

    // sum_j t_j G_j as an exact loop.
    BlockLoop exponent() const {
        std::map<int, cplx> t;
        for (const auto& [j, v] : times_) t[j] = v;
        return exponent_complex(t);
    }

    BlockLoop exponent_complex(const std::map<int, cplx>& t) const {
        BlockLoop x = BlockLoop::zero(n_);
        for (const auto& [j, v] : t) {
            if (v == cplx(0.0, 0.0)) continue;
            x = x + scale(generator(j), v);
        }
        return x.trimmed(0.0);
    }

    // g(z_m) (sign=+1) or g(z_m)^{-1} (sign=-1), nodewise matrix exponential.
    std::vector<Mat> samples(const CircleGrid& grid, int sign = +1) const {
        std::map<int, cplx> t;
        for (const auto& [j, v] : times_) t[j] = v;
        return samples_complex(t, grid, sign);
    }

    std::vector<Mat> samples_complex(const std::map<int, cplx>& t, const CircleGrid& grid,
                                     int sign = +1) const {
        BlockLoop x = exponent_complex(t);
        if (sign < 0) x = scale(x, -1.0);
        std::vector<Mat> vals = sample(x, grid);
        for (Mat& v : vals) v = detail::expm(v);
        return vals;
    }

private:
    int n_;
    std::vector<std::pair<int, BlockLoop>> gens_;
    std::map<int, double> times_;
    int preferred_m_;
};

// Scalar-type KP flows z^j Id for every index carrying a time (plus any
// extra indices requested explicitly).
inline FlowGroupElement kp_flows(int n, const std::map<int, double>& times,
                                 int max_index = 0, int preferred_grid_m = 256) {
    std::vector<std::pair<int, BlockLoop>> gens;
    int top = max_index;
    for (const auto& [j, v] : times) {
        (void)v;
        top = std::max(top, j);
    }
    for (int j = 1; j <= std::max(top, 1); ++j)
        gens.emplace_back(j, BlockLoop::monomial(j, Mat::Identity(n, n)));
    return FlowGroupElement(n, std::move(gens), times, preferred_grid_m);
}

// Jump symbol J(t) = g(t)^{-1} gamma with automatic grid enlargement until
// the Fourier tail of J is certified below tail_tol.
inline BlockLoop jump(const GrassmannPoint& point, const FlowGroupElement& flow,
                      double tail_tol = 1e-14) {
    if (point.dim() != flow.dim()) throw DimensionMismatch("jump: point/flow block size");
    int m = std::max(flow.preferred_grid_m(),
                     CircleGrid::for_bandwidth(point.gamma.bandwidth()).size());
    for (;;) {
        CircleGrid grid(m);
        std::vector<Mat> vals = flow.samples(grid, -1);
        std::vector<Mat> gam = sample(point.gamma, grid);
        for (int i = 0; i < grid.size(); ++i)
            vals[static_cast<size_t>(i)] = vals[static_cast<size_t>(i)] * gam[static_cast<size_t>(i)];
        try {
            return loop_from_samples_auto(vals, grid, tail_tol);
        } catch (const TailNotConverged&) {
            if (m >= 16384) throw;
            m *= 2;
        }
    }
}

namespace detail {

inline BlockLoop jump_complex(const GrassmannPoint& point, const FlowGroupElement& flow,
                              const std::map<int, cplx>& t, double tail_tol = 1e-14) {
    int m = std::max(flow.preferred_grid_m(),
                     CircleGrid::for_bandwidth(point.gamma.bandwidth()).size());
    for (;;) {
        CircleGrid grid(m);
        std::vector<Mat> vals = flow.samples_complex(t, grid, -1);
        std::vector<Mat> gam = sample(point.gamma, grid);
        for (int i = 0; i < grid.size(); ++i)
            vals[static_cast<size_t>(i)] = vals[static_cast<size_t>(i)] * gam[static_cast<size_t>(i)];
        try {
            return loop_from_samples_auto(vals, grid, tail_tol);
        } catch (const TailNotConverged&) {
            if (m >= 16384) throw;
            m *= 2;
        }
    }
}

} // namespace detail

struct NumericParams {
    int m_h = 24;                    // Hankel truncation floor for the operator determinant
    std::vector<int> schedule;       // section sizes for the extrapolation route
    std::string method = "fredholm"; // "fredholm" or "extrapolation"
    double tail_tol = 1e-14;
    int truncation = 24;             // Birkhoff truncation order
    double fd_step = 1e-4;           // central-difference step for derivative checks
};

struct TauEvaluation {
    cplx log_value = cplx(0.0, 0.0);
    std::map<int, double> times;
    std::string method;
    bool big_cell = true;          // false when the determinant vanished (off the big cell)
    double error_estimate = 0.0;   // extrapolation correction size; 0 for the operator route
};

// log tau through the Szego-Widom operator determinant (default) or the
// normalized finite-section limit.
inline TauEvaluation tau_ssw(const GrassmannPoint& point, const FlowGroupElement& flow,
                             const NumericParams& params = {}) {
    BlockLoop j = jump(point, flow, params.tail_tol);
    TauEvaluation ev;
    ev.times = flow.times();
    ev.method = params.method;
    if (params.method == "extrapolation") {
        std::vector<int> sched = params.schedule;
        if (sched.empty()) sched = {8, 16, 32, 64};
        LimitEstimate est = szego_widom_limit(j, sched, params.tail_tol);
        ev.log_value = est.value;
        ev.error_estimate = est.extrapolated_error;
        return ev;
    }
    if (params.method != "fredholm") throw Error("tau_ssw: unknown method " + params.method);
    cplx v = fredholm_det(j, params.m_h, params.tail_tol);
    if (is_log_det_sentinel(v)) {
        ev.big_cell = false;
        ev.log_value = v;
        return ev;
    }
    ev.log_value = v;
    return ev;
}

// Baker function w = g Gminus^{-1} as a loop, with the factorization data.
struct BakerFunction {
    BlockLoop w;
    RHSolution rh;
    BlockLoop jump_symbol;
    int grid_m = 0;
};

inline BakerFunction baker_function(const GrassmannPoint& point, const FlowGroupElement& flow,
                                    const NumericParams& params = {}) {
    BakerFunction bf;
    bf.jump_symbol = jump(point, flow, params.tail_tol);
    int m = std::max(flow.preferred_grid_m(),
                     CircleGrid::for_bandwidth(bf.jump_symbol.bandwidth()).size());
    for (;;) {
        CircleGrid grid(m);
        bf.rh = birkhoff_factorize(bf.jump_symbol, params.truncation, grid);
        std::vector<Mat> g_vals = flow.samples(grid, +1);
        std::vector<Mat> gm = sample(bf.rh.gamma_minus, grid);
        std::vector<Mat> vals(static_cast<size_t>(grid.size()));
        bool singular = false;
        for (int i = 0; i < grid.size() && !singular; ++i) {
            Eigen::FullPivLU<Mat> lu(gm[static_cast<size_t>(i)]);
            if (!lu.isInvertible()) singular = true;
            else vals[static_cast<size_t>(i)] = g_vals[static_cast<size_t>(i)] * lu.inverse();
        }
        if (!singular) {
            try {
                bf.w = loop_from_samples_auto(vals, grid, params.tail_tol);
                bf.grid_m = m;
                return bf;
            } catch (const TailNotConverged&) { /* enlarge below */ }
        } else {
            throw InverseFailed("baker_function: Gminus singular on the circle");
        }
        if (m >= 16384) throw TailNotConverged("baker_function: Fourier tail of w not certified");
        m *= 2;
    }
}

// Norm of p_minus(gamma^{-1} w); zero exactly when w lies in the subspace
// gamma H_+.
inline double membership_residual(const BakerFunction& bf, const GrassmannPoint& point,
                                  double tail_tol = 1e-14) {
    int m = detail::next_pow2(std::max(
        bf.grid_m, CircleGrid::for_bandwidth(bf.w.bandwidth() + point.gamma.bandwidth()).size()));
    CircleGrid grid(m);
    std::vector<Mat> wv = sample(bf.w, grid);
    std::vector<Mat> gv = sample(point.gamma, grid);
    std::vector<Mat> vals(static_cast<size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) {
        Eigen::FullPivLU<Mat> lu(gv[static_cast<size_t>(i)]);
        if (!lu.isInvertible())
            throw InverseFailed("membership_residual: gamma singular at node " + std::to_string(i));
        vals[static_cast<size_t>(i)] = lu.solve(wv[static_cast<size_t>(i)]);
    }
    // Tail tolerance loosened to the truncation scale: w itself carries the
    // factorization residual, which dominates the transform tail.
    BlockLoop gw = loop_from_samples(vals, grid, -m / 2 + 1, m / 2 - 1);
    double s = 0.0;
    for (int k = gw.k_min(); k <= -1; ++k) {
        double h = detail::hs_norm(gw.block(k));
        s += h * h;
    }
    (void)tail_tol;
    return std::sqrt(s);
}

// Generalized Sato formula: d/dt_j log tau =
// (1/2 pi i) contour integral of Tr( dw/dz w^{-1} G_j ) dz,
// with G_j = (d g/dt_j) g^{-1} the flow generator.
inline cplx generalized_sato_logderiv(const BakerFunction& bf, const BlockLoop& gen) {
    CircleGrid grid(detail::next_pow2(
        std::max(bf.grid_m, CircleGrid::for_bandwidth(bf.w.bandwidth() + gen.bandwidth()).size())));
    std::vector<Mat> wv = sample(bf.w, grid);
    std::vector<Mat> wz = sample(z_derivative(bf.w), grid);
    std::vector<Mat> gv = sample(gen, grid);
    std::vector<Mat> vals(static_cast<size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) {
        size_t s = static_cast<size_t>(i);
        Eigen::FullPivLU<Mat> lu(wv[s]);
        if (!lu.isInvertible())
            throw InverseFailed("generalized_sato_logderiv: w singular at node " + std::to_string(i));
        vals[s] = wz[s] * lu.inverse() * gv[s];
    }
    return contour_trace_integral(vals, grid);
}

inline cplx generalized_sato_logderiv(const GrassmannPoint& point, const FlowGroupElement& flow,
                                      int j, const NumericParams& params = {}) {
    return generalized_sato_logderiv(baker_function(point, flow, params), flow.generator(j));
}

// Defect of the Baker normalization: norm of p_plus(g^{-1} w) - Id, which
// vanishes since g^{-1} w = Gminus^{-1}.
inline double baker_normalization_residual(const BakerFunction& bf, const FlowGroupElement& flow) {
    CircleGrid grid(detail::next_pow2(std::max(
        bf.grid_m, CircleGrid::for_bandwidth(bf.w.bandwidth() + 4).size())));
    std::vector<Mat> gi = flow.samples(grid, -1);
    std::vector<Mat> wv = sample(bf.w, grid);
    for (int i = 0; i < grid.size(); ++i)
        gi[static_cast<size_t>(i)] = gi[static_cast<size_t>(i)] * wv[static_cast<size_t>(i)];
    BlockLoop gw = loop_from_samples(gi, grid, 0, grid.size() / 2 - 1);
    gw.block(0) -= Mat::Identity(gw.dim(), gw.dim());
    double s = 0.0;
    for (int k = gw.k_min(); k <= gw.k_max(); ++k)
        s = std::max(s, detail::max_abs(gw.block(k)));
    return s;
}

// Scalar Sato consistency: w(t; z0) tau(t) = g(t; z0) tau(t - [z0^{-1}])
// with [z0^{-1}]_k = z0^{-k}/k truncated at k = k_trunc.  Returns the
// relative discrepancy.
inline double sato_shift_check(const GrassmannPoint& point, const FlowGroupElement& flow,
                               cplx z0, int k_trunc, const NumericParams& params = {}) {
    if (point.dim() != 1) throw NotScalar("sato_shift_check: scalar symbols only");
    if (std::abs(z0) <= 1.0) throw Error("sato_shift_check: need |z0| > 1");
    FlowGroupElement full = kp_flows(1, flow.times(), k_trunc, flow.preferred_grid_m());

    BakerFunction bf = baker_function(point, full, params);
    cplx w0 = eval(bf.w, z0)(0, 0);
    cplx g0 = eval(full.exponent(), z0)(0, 0);
    g0 = std::exp(g0);

    std::map<int, cplx> t_plain, t_shift;
    for (const auto& [j, v] : full.times()) t_plain[j] = v;
    for (int k = 1; k <= k_trunc; ++k) {
        cplx shift = std::pow(z0, -k) / static_cast<double>(k);
        t_shift[k] = (t_plain.count(k) ? t_plain[k] : cplx(0.0, 0.0)) - shift;
    }
    for (const auto& [j, v] : t_plain)
        if (!t_shift.count(j)) t_shift[j] = v;

    auto log_tau_at = [&](const std::map<int, cplx>& t) {
        BlockLoop j = detail::jump_complex(point, full, t, params.tail_tol);
        return fredholm_det(j, params.m_h, params.tail_tol);
    };
    cplx tau_plain = std::exp(log_tau_at(t_plain));
    cplx tau_shift = std::exp(log_tau_at(t_shift));

    cplx lhs = w0 * tau_plain;
    cplx rhs = g0 * tau_shift;
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
}

// Max interior residual of the KP Hirota bilinear identity
// (D1^4 + 3 D2^2 - 4 D1 D3) tau . tau = 0
// on a (2K+1)^3 lattice in (t1, t2, t3), central differences with step h,
// reported relative to max |tau|^2.
inline double hirota_kp_residual(const GrassmannPoint& point, const std::map<int, double>& base,
                                 int half_width, double h, const NumericParams& params = {},
                                 int jobs = 1) {
    if (point.dim() != 1) throw NotScalar("hirota_kp_residual: scalar symbols only");
    int k = half_width;
    int side = 2 * k + 1;
    auto base_time = [&](int j) {
        auto it = base.find(j);
        return it == base.end() ? 0.0 : it->second;
    };
    std::vector<double> tau(static_cast<size_t>(side * side * side));
    std::vector<char> ok(tau.size(), 1);
    parallel_for(tau.size(), jobs, [&](std::size_t idx) {
        int i1 = static_cast<int>(idx) / (side * side);
        int i2 = (static_cast<int>(idx) / side) % side;
        int i3 = static_cast<int>(idx) % side;
        std::map<int, double> t = base;
        t[1] = base_time(1) + (i1 - k) * h;
        t[2] = base_time(2) + (i2 - k) * h;
        t[3] = base_time(3) + (i3 - k) * h;
        FlowGroupElement fl = kp_flows(1, t);
        TauEvaluation ev = tau_ssw(point, fl, params);
        if (!ev.big_cell) {
            ok[idx] = 0;
            tau[idx] = 0.0;
        } else {
            tau[idx] = std::exp(ev.log_value).real();
        }
    });
    auto at = [&](int i1, int i2, int i3) -> double {
        return tau[static_cast<size_t>((i1 * side + i2) * side + i3)];
    };
    auto good = [&](int i1, int i2, int i3) -> bool {
        return ok[static_cast<size_t>((i1 * side + i2) * side + i3)] != 0;
    };
    double tau_max = 0.0;
    for (double v : tau) tau_max = std::max(tau_max, std::abs(v));
    if (tau_max == 0.0) throw NotConverged("hirota_kp_residual: tau vanished on the whole lattice", 0);

    double worst = 0.0;
    for (int a = 2; a < side - 2; ++a)
        for (int b = 2; b < side - 2; ++b)
            for (int c = 2; c < side - 2; ++c) {
                bool usable = true;
                for (int d = -2; d <= 2 && usable; ++d)
                    usable = good(a + d, b, c) && good(a, b + d, c) && good(a, b, c + d);
                for (int d1s = -1; d1s <= 1 && usable; d1s += 2)
                    for (int d3s = -1; d3s <= 1 && usable; d3s += 2)
                        usable = good(a + d1s, b, c + d3s);
                if (!usable) continue;
                double f = at(a, b, c);
                double f1p = at(a + 1, b, c), f1m = at(a - 1, b, c);
                double f2p = at(a + 2, b, c), f2m = at(a - 2, b, c);
                double d1 = (f1p - f1m) / (2 * h);
                double d11 = (f1p - 2 * f + f1m) / (h * h);
                double d111 = (f2p - 2 * f1p + 2 * f1m - f2m) / (2 * h * h * h);
                double d1111 = (f2p - 4 * f1p + 6 * f - 4 * f1m + f2m) / (h * h * h * h);
                double g2p = at(a, b + 1, c), g2m = at(a, b - 1, c);
                double d2 = (g2p - g2m) / (2 * h);
                double d22 = (g2p - 2 * f + g2m) / (h * h);
                double g3p = at(a, b, c + 1), g3m = at(a, b, c - 1);
                double d3 = (g3p - g3m) / (2 * h);
                double d13 = (at(a + 1, b, c + 1) - at(a + 1, b, c - 1)
                            - at(a - 1, b, c + 1) + at(a - 1, b, c - 1)) / (4 * h * h);
                double bilinear = 2.0 * (f * d1111 - 4.0 * d1 * d111 + 3.0 * d11 * d11
                                         + 3.0 * f * d22 - 3.0 * d2 * d2
                                         - 4.0 * f * d13 + 4.0 * d1 * d3);
                worst = std::max(worst, std::abs(bilinear));
            }
    return worst / (tau_max * tau_max);
}

} // namespace taufn
