#pragma once

#include "taufn/grassmann.hpp"

namespace taufn {

// Structure constants of the untwisted affine algebra built on sl_n loops.
// For type A the normalizations kappa, r, k0 are all 1, so the central
// scale kappa/(r k0) is 1 as well.
struct AffineData {
    int n = 2;
    double kappa = 1.0;
    double r = 1.0;
    double k0 = 1.0;

    static AffineData type_a(int n) {
        if (n < 2) throw Error("AffineData: need n >= 2");
        return AffineData{n, 1.0, 1.0, 1.0};
    }

    int coxeter() const { return n; }
    double central_scale() const { return kappa / (r * k0); }
    // Exponents of the principal gradation: every integer not divisible by n.
    bool is_exponent(int j) const { return j % n != 0; }
    std::vector<int> exponents_up_to(int bound) const {
        std::vector<int> e;
        for (int j = -bound; j <= bound; ++j)
            if (j != 0 && is_exponent(j)) e.push_back(j);
        return e;
    }
};

// Loop-plus-central element; the loop blocks are required trace-free.
struct ExtendedElement {
    BlockLoop loop;
    cplx central;

    explicit ExtendedElement(BlockLoop l, cplx c = cplx(0.0, 0.0))
        : loop(std::move(l)), central(c) {
        for (int k = loop.k_min(); k <= loop.k_max(); ++k) {
            double scale = 1.0 + detail::max_abs(loop.block(k));
            if (std::abs(loop.block(k).trace()) > 1e-12 * scale)
                throw Error("ExtendedElement: block trace exceeds 1e-12");
        }
    }
};

// 2-cocycle omega(a, b) = (kappa / r k0) * (1/2 pi i) * contour integral of
// Tr( da/dz b ) dz, evaluated by grid quadrature.
inline cplx cocycle(const BlockLoop& a, const BlockLoop& b, const AffineData& data,
                    int grid_m = 0) {
    if (a.dim() != b.dim() || a.dim() != data.n)
        throw DimensionMismatch("cocycle: block size mismatch");
    BlockLoop prod = z_derivative(a) * b;
    CircleGrid grid(grid_m > 0 ? detail::next_pow2(grid_m)
                               : detail::next_pow2(2 * prod.bandwidth() + 4));
    return data.central_scale() * contour_trace_integral(sample(prod, grid), grid);
}

// [X + x c, Y + y c] = (XY - YX) + omega(X, Y) c.
inline ExtendedElement extended_bracket(const ExtendedElement& x, const ExtendedElement& y,
                                        const AffineData& data) {
    BlockLoop comm = (x.loop * y.loop - y.loop * x.loop).trimmed(0.0);
    return ExtendedElement(std::move(comm), cocycle(x.loop, y.loop, data));
}

// Chevalley generators of the affine A_{n-1} algebra in the level-one loop
// realization: e_0 = z E_{1,n}, f_0 = z^{-1} E_{n,1}, e_i = E_{i+1,i},
// f_i = E_{i,i+1} for i = 1..n-1 (matrix indices 1-based).
struct WeylGenerators {
    std::vector<ExtendedElement> e, f, h;  // h[i] = [e_i, f_i]
};

inline WeylGenerators weyl_generators(const AffineData& data) {
    int n = data.n;
    auto unit = [&](int row, int col) {
        Mat m = Mat::Zero(n, n);
        m(row, col) = 1.0;
        return m;
    };
    WeylGenerators w;
    w.e.emplace_back(BlockLoop::monomial(1, unit(0, n - 1)));
    w.f.emplace_back(BlockLoop::monomial(-1, unit(n - 1, 0)));
    for (int i = 1; i <= n - 1; ++i) {
        w.e.emplace_back(BlockLoop::monomial(0, unit(i, i - 1)));
        w.f.emplace_back(BlockLoop::monomial(0, unit(i - 1, i)));
    }
    for (int i = 0; i <= n - 1; ++i) w.h.push_back(extended_bracket(w.e[i], w.f[i], data));
    return w;
}

// Principal cyclic element: ones on the first subdiagonal plus z in the
// top-right corner.  Lambda^n = z Id exactly.
inline BlockLoop principal_lambda(int n) {
    if (n < 2) throw Error("principal_lambda: need n >= 2");
    BlockLoop l(n, 0, 1);
    for (int i = 0; i + 1 < n; ++i) l.block(0)(i + 1, i) = 1.0;
    l.block(1)(0, n - 1) = 1.0;
    return l;
}

// Lambda^j for any exponent j (positive or negative), through the exact
// relation Lambda^{qn+s} = z^q Lambda^s.  Multiples of n are rejected:
// they are central directions of the principal Heisenberg, not exponents.
inline BlockLoop lambda_j(const AffineData& data, int j) {
    if (!data.is_exponent(j) || j == 0)
        throw NotAnExponent("lambda_j: index divisible by n");
    int n = data.n;
    int q = j >= 0 ? j / n : -((-j + n - 1) / n);
    int s = j - q * n;  // 0 < s < n
    BlockLoop l = BlockLoop::identity(n);
    BlockLoop lam = principal_lambda(n);
    for (int i = 0; i < s; ++i) l = l * lam;
    return z_shift(l, q);
}

struct AdjointCoefficient {
    cplx series_value = cplx(0.0, 0.0);
    cplx contour_value = cplx(0.0, 0.0);
    int terms_used = 0;
};

// Central coefficient of Ad_{exp X} Y two ways: the Baker-Campbell series
// sum_m ( (ad_X)^m Y )_c / m!  (exact termination for X with strictly
// negative support) and the contour form
// (kappa / r k0) * (1/2 pi i) * integral Tr( d(e^X)/dz Y e^{-X} ) dz.
inline AdjointCoefficient adjoint_c_coefficient(const BlockLoop& x, const BlockLoop& y,
                                                const AffineData& data, int series_order = 48,
                                                double tail_tol = 1e-14) {
    AdjointCoefficient out;
    BlockLoop w = y.trimmed(0.0);
    double fact = 1.0;
    cplx last_term(0.0, 0.0);
    for (int m = 1; m <= series_order; ++m) {
        fact *= static_cast<double>(m);
        last_term = cocycle(x, w, data) / fact;
        out.series_value += last_term;
        out.terms_used = m;
        w = (x * w - w * x).trimmed(1e-300);
        // Once w has no modes of degree >= 1 the cocycle against a strictly
        // negative X vanishes for all further terms.
        if (x.k_max() <= -1 && w.k_max() < 1) break;
        if (detail::max_abs(w.coeff(w.k_max())) == 0.0 && w.k_min() == w.k_max()) break;
    }
    if (out.terms_used == series_order
        && std::abs(last_term) > 1e-12 * (1.0 + std::abs(out.series_value)))
        throw SeriesNotConverged("adjoint_c_coefficient: series tail not negligible");

    BlockLoop ex = preset_exp_of(x, tail_tol);
    BlockLoop ex_inv = preset_exp_of(scale(x, -1.0), tail_tol);
    BlockLoop prod = z_derivative(ex) * y * ex_inv;
    CircleGrid grid(detail::next_pow2(2 * prod.bandwidth() + 4));
    out.contour_value = data.central_scale() * contour_trace_integral(sample(prod, grid), grid);
    return out;
}

// Positive power of the cyclic element for the flow group; multiples of n
// give the central directions z^{j/n} Id, which the group keeps even though
// the algebra-level lambda_j rejects them.
inline BlockLoop principal_power(int n, int j) {
    if (j < 1) throw Error("principal_power: need j >= 1");
    int q = j / n, s = j % n;
    BlockLoop l = BlockLoop::identity(n);
    BlockLoop lam = principal_lambda(n);
    for (int i = 0; i < s; ++i) l = l * lam;
    return z_shift(l, q);
}

// Principal flows g = exp( sum_j t_j Lambda^j ) over all positive powers.
inline FlowGroupElement principal_flows(const AffineData& data, const std::map<int, double>& times,
                                        int preferred_grid_m = 256) {
    std::vector<std::pair<int, BlockLoop>> gens;
    int top = 1;
    for (const auto& [j, v] : times) {
        (void)v;
        if (j < 1) throw Error("principal_flows: flow indices must be >= 1");
        top = std::max(top, j);
    }
    for (int j = 1; j <= top; ++j)
        gens.emplace_back(j, principal_power(data.n, j));
    return FlowGroupElement(data.n, std::move(gens), times, preferred_grid_m);
}

// Homogeneous Heisenberg flows g = exp( sum t_{j,i} z^j H_i ); the flat
// index packs degree and Cartan direction as j * n + i with i = 1..n-1.
inline int homogeneous_index(const AffineData& data, int degree, int cartan) {
    if (degree < 1 || cartan < 1 || cartan > data.n - 1)
        throw Error("homogeneous_index: need degree >= 1 and 1 <= i <= n-1");
    return degree * data.n + cartan;
}

// H_i = alpha_i^vee = E_{i+1,i+1} - E_{i,i} (1-based), the coroot matrix.
inline Mat cartan_h(int n, int i) {
    Mat m = Mat::Zero(n, n);
    m(i - 1, i - 1) = -1.0;
    m(i, i) = 1.0;
    return m;
}

inline FlowGroupElement homogeneous_flows(const AffineData& data,
                                          const std::map<int, double>& times,
                                          int preferred_grid_m = 256) {
    int n = data.n;
    std::vector<std::pair<int, BlockLoop>> gens;
    int top_degree = 1;
    for (const auto& [idx, v] : times) {
        (void)v;
        int degree = idx / n, cartan = idx % n;
        if (degree < 1 || cartan < 1)
            throw Error("homogeneous_flows: index must pack degree*n + i with i in 1..n-1");
        top_degree = std::max(top_degree, degree);
    }
    for (int degree = 1; degree <= top_degree; ++degree)
        for (int i = 1; i <= n - 1; ++i)
            gens.emplace_back(homogeneous_index(data, degree, i),
                              BlockLoop::monomial(degree, cartan_h(n, i)));
    return FlowGroupElement(n, std::move(gens), times, preferred_grid_m);
}

// Basis slice of the homogeneous Heisenberg subalgebra together with its
// cocycle pairing table: table[j-1](i-1, i'-1) = omega(z^j H_i, z^{-j} H_i').
struct HomogeneousBasis {
    struct Element {
        int degree;
        int cartan;
        BlockLoop loop;
    };
    std::vector<Element> elements;         // degrees -j_max..j_max, degree 0 included
    std::vector<Eigen::MatrixXd> pairing;  // one (n-1)^2 table per degree 1..j_max
};

inline HomogeneousBasis homogeneous_heisenberg_basis(const AffineData& data, int j_max) {
    if (j_max < 1) throw Error("homogeneous_heisenberg_basis: need j_max >= 1");
    int n = data.n;
    HomogeneousBasis basis;
    for (int j = -j_max; j <= j_max; ++j)
        for (int i = 1; i <= n - 1; ++i)
            basis.elements.push_back({j, i, BlockLoop::monomial(j, cartan_h(n, i))});
    for (int j = 1; j <= j_max; ++j) {
        Eigen::MatrixXd table(n - 1, n - 1);
        for (int i = 1; i <= n - 1; ++i)
            for (int i2 = 1; i2 <= n - 1; ++i2)
                table(i - 1, i2 - 1) =
                    cocycle(BlockLoop::monomial(j, cartan_h(n, i)),
                            BlockLoop::monomial(-j, cartan_h(n, i2)), data)
                        .real();
        basis.pairing.push_back(std::move(table));
    }
    return basis;
}

// Drinfeld-Sokolov dressing relation: with Theta = Gminus from the Birkhoff
// factorization of the jump, the central coefficient of Ad_Theta(Lambda^j)
// reproduces the tau flow derivative,
//   -(Theta Lambda^j Theta^{-1})_c = (kappa / r k0) d/dt_j log tau.
// Returns |lhs - rhs| with the right side from central differences of the
// operator determinant.
inline double ds_tau_relation_check(const GrassmannPoint& point, const FlowGroupElement& flow,
                                    int j, const AffineData& data,
                                    const NumericParams& params = {}) {
    if (point.dim() != data.n) throw DimensionMismatch("ds_tau_relation_check: block size");
    BlockLoop jmp = jump(point, flow, params.tail_tol);
    CircleGrid grid(detail::next_pow2(
        std::max(flow.preferred_grid_m(), 4 * (jmp.bandwidth() + std::abs(j) / data.n + 2))));
    RHSolution sol = birkhoff_factorize(jmp, params.truncation, grid);

    BlockLoop theta_z = z_derivative(sol.gamma_minus);
    BlockLoop lam = lambda_j(data, j);
    std::vector<Mat> th = sample(sol.gamma_minus, grid);
    std::vector<Mat> thz = sample(theta_z, grid);
    std::vector<Mat> lm = sample(lam, grid);
    std::vector<Mat> vals(static_cast<size_t>(grid.size()));
    for (int m = 0; m < grid.size(); ++m) {
        size_t i = static_cast<size_t>(m);
        Eigen::FullPivLU<Mat> lu(th[i]);
        if (!lu.isInvertible())
            throw InverseFailed("ds_tau_relation_check: Theta singular at node " + std::to_string(m));
        vals[i] = thz[i] * lm[i] * lu.inverse();
    }
    cplx lhs = -data.central_scale() * contour_trace_integral(vals, grid);

    double h = params.fd_step;
    auto log_tau = [&](double tj) {
        TauEvaluation ev = tau_ssw(point, flow.with_time(j, tj), params);
        if (!ev.big_cell) throw NotConverged("ds_tau_relation_check: off the big cell", 0);
        return ev.log_value;
    };
    double t0 = flow.time(j);
    cplx rhs = data.central_scale() * (log_tau(t0 + h) - log_tau(t0 - h)) / (2.0 * h);
    return std::abs(lhs - rhs);
}

} // namespace taufn
