#pragma once
#include <numbers>

#include "spectral.hpp"

namespace ovtl {

enum class Shape { radial, conic };

inline std::string to_string(Shape s) { return s == Shape::radial ? "radial" : "conic"; }

struct SquareLevel {
    int j = 0;
    Symbol symbol;
    double weight = 1; // radial weight; conic adds 2^{jd} and the ball sum
};

struct SquareFunctionSpec {
    std::string kernel_id;
    double alpha = 0;
    Shape shape = Shape::radial;
    bool include_zero_term = true;
    std::vector<SquareLevel> levels;

    int top() const
    {
        int t = 0;
        for (auto& l : levels) t = std::max(t, l.j);
        return t;
    }
};

// sum_{j} 2^{2 j alpha} |phi_j * f|^2 over the LP family, j >= 1 plus j = 0 when asked
inline SquareFunctionSpec lp_spec(const LPFamily& fam, double alpha, bool include_zero = true, Shape shape = Shape::radial)
{
    SquareFunctionSpec s;
    s.kernel_id = fam.id();
    s.alpha = alpha;
    s.shape = shape;
    s.include_zero_term = include_zero;
    for (int j = include_zero ? 0 : 1; j <= fam.j_max(); ++j) s.levels.push_back({j, fam[j], std::exp2(2 * j * alpha)});
    return s;
}

// number of dyadic Poisson levels so that eps = 2^{-j} reaches below the Nyquist scale
inline int poisson_levels(const Grid& g) { return g.log2N() + 1; }

// int_0^1 eps^{2(k-alpha)} |d^k/deps^k P_eps f|^2 deps/eps on eps = 2^{-j}
inline SquareFunctionSpec poisson_spec(const Grid& g, int j_top, int k = 1, double alpha = 0, Shape shape = Shape::radial)
{
    SquareFunctionSpec s;
    s.kernel_id = "poisson(k=" + std::to_string(k) + ")";
    s.alpha = alpha;
    s.shape = shape;
    s.include_zero_term = false;
    for (int j = 1; j <= j_top; ++j)
        s.levels.push_back({j, poisson_dk_symbol(g, std::ldexp(1.0, -j), k), std::numbers::ln2 * std::exp2(-2.0 * j * (k - alpha))});
    return s;
}

// h^d * DFT of the indicator of B_j, real by symmetry
inline Symbol ball_symbol(const Grid& g, const ConeLevel& lv)
{
    std::vector<cplx> ind(g.points(), 0.0);
    for (auto& u : lv.offsets) ind[g.ravel(u)] = 1.0;
    Symbol m(g);
    m.values = scalar_fft_forward(std::move(ind), g);
    for (auto& v : m.values) v = cplx(v.real(), 0);
    m.tag = "ball(" + std::to_string(lv.j) + ")";
    return m;
}

// pointwise Gram field u(s)* u(s)
inline OperatorField gram(const OperatorField& u)
{
    OperatorField r(u.grid(), u.n());
    for (long p = 0; p < u.points(); ++p) r.at(p).noalias() = u.at(p).adjoint() * u.at(p);
    return r;
}

// relative round-off of an FFT convolution at this grid size
inline double convolution_noise(const Grid& g) { return 64 * std::numeric_limits<double>::epsilon() * (1 + g.log2N() * g.d); }

// s -> sum_{t in B_j} h^d G(s+t)
inline OperatorField ball_average(const OperatorField& G, const Symbol& ball) { return apply_symbol(ball, G); }

inline PSDAccumulator accumulate(const OperatorField& f, const SquareFunctionSpec& spec, const ConeIndex* cone = nullptr)
{
    PSDAccumulator acc(f.grid(), f.n());
    OperatorField fhat = fft_forward(f);
    const Grid& g = f.grid();
    for (auto& lv : spec.levels) {
        require_same(lv.symbol.grid, g);
        OperatorField u = apply_symbol_hat(lv.symbol, fhat);
        if (spec.shape == Shape::radial || lv.j == 0) {
            acc.add_gram(lv.weight, u);
            continue;
        }
        if (!cone) throw DomainError("conic square function needs a cone index");
        require_same(cone->grid, g);
        Symbol ball = ball_symbol(g, cone->level(lv.j));
        acc.add_psd(lv.weight * std::exp2(double(lv.j * g.d)), ball_average(gram(u), ball), convolution_noise(g));
    }
    for (long p = 0; p < f.points(); ++p) acc.field().at(p) = hermitian_part(acc.field().at(p));
    return acc;
}

inline OperatorField g_radial(const OperatorField& f, const SquareFunctionSpec& spec)
{
    if (spec.shape != Shape::radial) throw DomainError("g_radial needs a radial spec");
    return sqrt_psd(accumulate(f, spec));
}

inline OperatorField s_conic(const OperatorField& f, SquareFunctionSpec spec, const ConeIndex& cone)
{
    spec.shape = Shape::conic;
    return sqrt_psd(accumulate(f, spec, &cone));
}

// A^c(F)(s)^2 = sum_j log2 2^{jd} sum_{t in B_j} h^d |F(s+t, 2^{-j})|^2
inline PSDAccumulator tent_accumulate(const StripField& F, const ConeIndex& cone)
{
    const Grid& g = F.grid();
    require_same(cone.grid, g);
    if (F.j_max() > cone.j_max) throw ResolutionError("strip deeper than cone index");
    PSDAccumulator acc(g, F.n());
    for (int j = 1; j <= F.j_max(); ++j) {
        Symbol ball = ball_symbol(g, cone.level(j));
        acc.add_psd(std::numbers::ln2 * std::exp2(double(j * g.d)), ball_average(gram(F.level(j)), ball), convolution_noise(g));
    }
    for (long p = 0; p < g.points(); ++p) acc.field().at(p) = hermitian_part(acc.field().at(p));
    return acc;
}

inline OperatorField tent_functional(const StripField& F, const ConeIndex& cone) { return sqrt_psd(tent_accumulate(F, cone)); }

} // namespace ovtl
