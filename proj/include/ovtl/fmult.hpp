#pragma once
#include <functional>

#include "generators.hpp"
#include "normsuite.hpp"

namespace ovtl {

// members phi_j as functions of physical frequency, 0 <= j <= j_max
struct SymbolSequence {
    std::string id;
    int j_max = 0;
    std::function<cplx(int, const Vec&)> member;
    // rho with member(j, xi) = profile(2^{-j} |xi|) for j >= 1, when the sequence is a dilation family
    std::function<double(double)> profile;

    cplx operator()(int j, const Vec& xi) const { return j < 0 || j > j_max ? cplx(0) : member(j, xi); }

    Symbol symbol(const Grid& g, int j, double window = 1) const
    {
        return make_symbol(g, [&](const Vec& xi) { return (*this)(j, xi); }, id + "(" + std::to_string(j) + ")", window);
    }

    SymbolSequence scaled(double c) const
    {
        SymbolSequence s = *this;
        s.id = fmt_double(c) + "*" + id;
        s.member = [m = member, c](int j, const Vec& xi) { return c * m(j, xi); };
        s.profile = nullptr;
        return s;
    }
};

inline SymbolSequence lp_sequence(const LPFamily& fam, int j_max)
{
    SymbolSequence s;
    s.id = fam.id();
    s.j_max = j_max;
    s.member = [fam](int j, const Vec& xi) { return cplx(fam.member(j, xi, fam.grid().d), 0); };
    s.profile = [fam](double r) { return fam.bump(r); };
    return s;
}

inline SymbolSequence constant_sequence(cplx c, int j_max)
{
    SymbolSequence s;
    s.id = "const(" + fmt_double(c.real()) + "," + fmt_double(c.imag()) + ")";
    s.j_max = j_max;
    s.member = [c](int, const Vec&) { return c; };
    return s;
}

// phi_j(xi) = 2^{-j beta} (1+|xi|^2)^{beta/2}, the dilated Bessel potentials of the lifting argument
inline SymbolSequence bessel_sequence(int d, double beta, int j_max)
{
    SymbolSequence s;
    s.id = "bessel_dilate(" + fmt_double(beta) + ")";
    s.j_max = j_max;
    s.member = [d, beta](int j, const Vec& xi) {
        double r = norm(xi, d);
        return cplx(std::exp2(-j * beta) * std::pow(1 + r * r, beta / 2), 0);
    };
    return s;
}

// phi_j(xi) = 2^{-j beta} |xi|^beta, exactly dilation covariant
inline SymbolSequence riesz_sequence(int d, double beta, int j_max)
{
    SymbolSequence s;
    s.id = "riesz_dilate(" + fmt_double(beta) + ")";
    s.j_max = j_max;
    s.member = [d, beta](int j, const Vec& xi) {
        double r = norm(xi, d);
        return cplx(r == 0 ? 0.0 : std::exp2(-j * beta) * std::pow(r, beta), 0);
    };
    return s;
}

// phi_j(xi) = phi_{j+K}(2^K xi)
inline SymbolSequence shifted(const SymbolSequence& s, int K)
{
    SymbolSequence r;
    r.id = s.id + "[K=" + std::to_string(K) + "]";
    r.j_max = s.j_max - K;
    r.member = [s, K](int j, const Vec& xi) {
        Vec y = xi;
        for (auto& v : y) v = std::ldexp(v, K);
        return s(j + K, y);
    };
    return r;
}

inline SymbolSequence product(const SymbolSequence& a, const SymbolSequence& b)
{
    SymbolSequence r;
    r.id = a.id + "*" + b.id;
    r.j_max = std::min(a.j_max, b.j_max);
    r.member = [a, b](int j, const Vec& xi) { return a(j, xi) * b(j, xi); };
    return r;
}

struct HypothesisEntry {
    int j = 0, k = 0; // j = 0 marks the phi_0 (phi^(0) + phi^(1)) term
    double value = 0;
};

struct HypothesisTable {
    double sigma = 0, window = 0;
    std::vector<HypothesisEntry> entries;
    double sup_part = 0, zero_part = 0;
    double constant() const { return std::max(sup_part, zero_part); }
};

inline void require_hypothesis_window(const Grid& g, double W, int j, int k)
{
    if (W > g.N / 4.0 || W * std::ldexp(1.0, -3) < 1)
        throw ResolutionError("dilate unresolvable at window " + fmt_double(W) + " for (j,k) = (" + std::to_string(j) + "," +
                              std::to_string(k) + ")");
}

// ||phi_j(2^{j+k} .) phi||_{H^sigma} for j >= 1, -2 <= k <= 2, and ||phi_0 (phi^(0) + phi^(1))||_{H^sigma}
inline HypothesisTable hypothesis_table(const SymbolSequence& seq, double sigma, const LPFamily& fam, double window = 0)
{
    const Grid& g = fam.grid();
    double W = window > 0 ? window : default_window(g);
    HypothesisTable t;
    t.sigma = sigma;
    t.window = W;
    int d = g.d;
    require_hypothesis_window(g, W, 0, 0);
    Symbol z = make_symbol(g, [&](const Vec& xi) {
        return seq(0, xi) * (fam.member(0, xi, d) + fam.member(1, xi, d));
    }, "hyp0", W);
    t.zero_part = hsigma_norm(z, sigma);
    t.entries.push_back({0, 0, t.zero_part});
    for (int j = 1; j <= seq.j_max; ++j)
        for (int k = -2; k <= 2; ++k) {
            require_hypothesis_window(g, W, j, k);
            Symbol m = make_symbol(g, [&](const Vec& xi) {
                Vec y = xi;
                for (auto& v : y) v = std::ldexp(v, j + k);
                return seq(j, y) * fam.phi(xi, d);
            }, "hyp", W);
            double v = hsigma_norm(m, sigma);
            t.entries.push_back({j, k, v});
            t.sup_part = std::max(t.sup_part, v);
        }
    return t;
}

inline double hypothesis_constant(const SymbolSequence& seq, double sigma, const LPFamily& fam, double window = 0)
{
    return hypothesis_table(seq, sigma, fam, window).constant();
}

// supp(phi_j rho_j) inside the j-th annulus on every lattice frequency; throws when the theorem does not apply
inline void check_support(const SymbolSequence& phi, const SymbolSequence& rho, const Grid& g)
{
    int J = std::min(phi.j_max, rho.j_max);
    for (long p = 0; p < g.points(); ++p) {
        Vec xi = g.freq(p);
        double r = norm(xi, g.d);
        for (int j = 0; j <= J; ++j) {
            if (phi(j, xi) * rho(j, xi) == cplx(0)) continue;
            double lo = j == 0 ? 0 : std::ldexp(1.0, j - 1), hi = j == 0 ? 2 : std::ldexp(1.0, j + 1);
            if (r < lo || r > hi)
                throw HypothesisError("supp(phi_j rho_j) leaves the annulus at j = " + std::to_string(j) + ", |xi| = " + fmt_double(r));
        }
    }
}

// p = 1 needs rho_j = rho(2^{-j} .) for j >= 1 with rho > 0 on 1/2 < |xi| < 2
inline void check_rho_shape(const SymbolSequence& rho, const Grid& g)
{
    if (!rho.profile) throw HypothesisError("p = 1 needs a dilation profile for rho");
    for (int i = 1; i < 400; ++i) {
        double r = 0.5 + 1.5 * i / 400.0;
        if (!(rho.profile(r) > 0)) throw HypothesisError("rho profile vanishes at |xi| = " + fmt_double(r));
    }
    for (long p = 0; p < g.points(); ++p) {
        Vec xi = g.freq(p);
        double r = norm(xi, g.d);
        for (int j = 1; j <= rho.j_max; ++j)
            if (std::abs(rho(j, xi) - rho.profile(std::ldexp(r, -j))) > 1e-14)
                throw HypothesisError("rho_j is not a dilate of its profile at j = " + std::to_string(j));
    }
}

using FieldGenerator = std::function<OperatorField(std::uint64_t)>;

inline FieldGenerator band_limited_generator(const Grid& g, int n, double r_lo, double r_hi)
{
    return [=](std::uint64_t seed) {
        CounterRng rng(seed);
        return band_limited_random(g, n, r_lo, r_hi, rng);
    };
}

struct MultiplierCertificate {
    std::string phi_id, rho_id;
    Shape shape = Shape::radial;
    double c_hyp = 0, r_emp = 0, margin = 100, sigma = 0, alpha = 0, p = 0, window = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    std::vector<double> ratios;
    bool pass() const { return std::isfinite(r_emp) && r_emp <= margin * c_hyp; }

    Section to_section() const
    {
        Section s{"multiplier", {}};
        s.set("phi", phi_id).set("rho", rho_id).set("shape", to_string(shape));
        s.set("sigma", sigma).set("alpha", alpha).set("p", p).set("window", window);
        s.set("trials", trials).set("seed", (unsigned long long)seed).set("margin", margin);
        s.set("c_hyp", c_hyp).set("r_emp", r_emp).set("pass", pass());
        return s;
    }
};

struct MultiplierOptions {
    double sigma = 0; // 0 selects default_sigma(d)
    double margin = 100;
    std::uint64_t seed = 0;
    double window = 0;
};

inline SquareFunctionSpec sequence_spec(const SymbolSequence& s, const Grid& g, double alpha, Shape shape)
{
    SquareFunctionSpec sp;
    sp.kernel_id = s.id;
    sp.alpha = alpha;
    sp.shape = shape;
    for (int j = 0; j <= s.j_max; ++j) sp.levels.push_back({j, s.symbol(g, j), std::exp2(2 * j * alpha)});
    return sp;
}

namespace detail {

inline MultiplierCertificate empirical_bound(const SymbolSequence& phi, const SymbolSequence& rho, const FieldGenerator& gen,
                                             const LPFamily& fam, double alpha, double p, int trials, Shape shape,
                                             const MultiplierOptions& opt)
{
    const Grid& g = fam.grid();
    check_finite_p(p);
    check_support(phi, rho, g);
    if (p == 1) check_rho_shape(rho, g);
    MultiplierCertificate c;
    c.phi_id = phi.id;
    c.rho_id = rho.id;
    c.shape = shape;
    c.sigma = opt.sigma > 0 ? opt.sigma : default_sigma(g.d);
    c.alpha = alpha;
    c.p = p;
    c.margin = opt.margin;
    c.seed = opt.seed;
    c.trials = trials;
    c.window = opt.window > 0 ? opt.window : default_window(g);
    c.c_hyp = hypothesis_constant(phi, c.sigma, fam, c.window);
    SymbolSequence out = product(phi, rho);
    out.j_max = rho.j_max;
    SquareFunctionSpec in_spec = sequence_spec(rho, g, alpha, shape), out_spec = sequence_spec(out, g, alpha, shape);
    std::optional<ConeIndex> cone;
    if (shape == Shape::conic) cone = cone_index(g, rho.j_max);
    for (int t = 0; t < trials; ++t) {
        OperatorField f = gen(opt.seed + std::uint64_t(t));
        auto norm_of = [&](const SquareFunctionSpec& s) {
            return trace_lp_norm(sqrt_psd(accumulate(f, s, cone ? &*cone : nullptr)), p);
        };
        double in = norm_of(in_spec), o = norm_of(out_spec);
        double r = in > 0 ? o / in : 0.0;
        c.ratios.push_back(r);
        c.r_emp = std::max(c.r_emp, r);
    }
    return c;
}

} // namespace detail

inline MultiplierCertificate empirical_square_bound(const SymbolSequence& phi, const SymbolSequence& rho, const FieldGenerator& gen,
                                                    const LPFamily& fam, double alpha, double p, int trials,
                                                    const MultiplierOptions& opt = {})
{
    return detail::empirical_bound(phi, rho, gen, fam, alpha, p, trials, Shape::radial, opt);
}

inline MultiplierCertificate empirical_conic_bound(const SymbolSequence& phi, const SymbolSequence& rho, const FieldGenerator& gen,
                                                   const LPFamily& fam, double alpha, double p, int trials,
                                                   const MultiplierOptions& opt = {})
{
    return detail::empirical_bound(phi, rho, gen, fam, alpha, p, trials, Shape::conic, opt);
}

// p = 2, alpha = 0: the square-function multiplier acts diagonally in frequency, its norm is max |phi_j| over supp rho_j
inline double exact_l2_bound(const SymbolSequence& phi, const SymbolSequence& rho, const Grid& g)
{
    double m = 0;
    for (long p = 0; p < g.points(); ++p) {
        Vec xi = g.freq(p);
        double in = 0, out = 0;
        for (int j = 0; j <= rho.j_max; ++j) {
            double a = std::norm(rho(j, xi));
            in += a;
            out += a * std::norm(phi(j, xi));
        }
        if (in > 0) m = std::max(m, std::sqrt(out / in));
    }
    return m;
}

struct CZEstimates {
    double e1 = 0, e2 = 0, e3 = 0, phi_norm = 0;
    double window = 0, stride = 0;
    Vec argmax_t{0, 0, 0};

    double constant() const { return phi_norm > 0 ? std::max({e1, e2, e3}) / phi_norm : 0.0; }

    Section to_section() const
    {
        Section s{"cz", {}};
        s.set("e1", e1).set("e2", e2).set("e3", e3).set("phi_norm", phi_norm);
        s.set("window", window).set("stride", stride);
        s.set("argmax_t", fmt_double(argmax_t[0]) + "," + fmt_double(argmax_t[1]) + "," + fmt_double(argmax_t[2]));
        s.set("constant", constant());
        return s;
    }
};

// ||phi||_{2,sigma} = max{ sup_{k>=1} ||phi(2^k .) phi_base||, ||phi phi^(0)|| } in H^sigma(l_2)
inline double sequence_phi_norm(const SymbolSequence& seq, double sigma, const LPFamily& fam)
{
    const Grid& g = fam.grid();
    double W = default_window(g);
    int d = g.d;
    auto l2_hsigma = [&](auto weight) {
        double s = 0;
        for (int j = 0; j <= seq.j_max; ++j) {
            Symbol m = make_symbol(g, [&](const Vec& xi) { return weight(j, xi); }, "cz", W);
            s += std::pow(hsigma_norm(m, sigma), 2);
        }
        return std::sqrt(s);
    };
    double best = l2_hsigma([&](int j, const Vec& xi) { return seq(j, xi) * fam.member(0, xi, d); });
    for (int k = 1; k <= seq.j_max + 1; ++k)
        best = std::max(best, l2_hsigma([&](int j, const Vec& xi) {
            Vec y = xi;
            for (auto& v : y) v = std::ldexp(v, k);
            return seq(j, y) * fam.phi(xi, d);
        }));
    return best;
}

// kernels k_j = inverse transform of phi_j on a torus of side W = N / 2^{j_max+2}
inline CZEstimates cz_kernel_estimates(const SymbolSequence& seq, double sigma, const LPFamily& fam, long stride = 1)
{
    const Grid& g = fam.grid();
    if (stride < 1) throw DomainError("stride must be >= 1");
    double W = double(g.N) / std::exp2(seq.j_max + 2);
    if (W < 2) throw ResolutionError("grid too coarse for the kernel window");
    CZEstimates e;
    e.window = W;
    e.stride = stride * W / double(g.N);
    long P = g.points();
    int J = seq.j_max + 1;
    // kernels stored point-major, J values per point
    std::vector<cplx> k(size_t(P) * J);
    std::vector<double> e1(P, 0.0);
    for (int j = 0; j < J; ++j) {
        Symbol m = seq.symbol(g, j, W);
        for (long p = 0; p < P; ++p) e1[p] += std::norm(m[p]);
        std::vector<cplx> v = scalar_fft_inverse(m.values, g);
        for (long p = 0; p < P; ++p) k[size_t(p) * J + j] = v[p] * std::pow(W, -g.d);
    }
    for (double x : e1) e.e1 = std::max(e.e1, std::sqrt(x));
    double cell = std::pow(W / double(g.N), g.d);
    auto xnorm = [&](long p) { return W * norm(g.coord_per(p), g.d); };
    auto kn = [&](long p, long q) {
        double s = 0;
        for (int j = 0; j < J; ++j) s += std::norm(k[size_t(p) * J + j] - (q < 0 ? cplx(0) : k[size_t(q) * J + j]));
        return std::sqrt(s);
    };
    std::vector<double> tail;
    for (long p = 0; p < P; ++p)
        if (xnorm(p) >= 0.5) tail.push_back(kn(p, -1) * cell);
    e.e2 = tree_sum(tail);
    for (long sp = 0; sp < P; ++sp) {
        IVec m = g.unravel(sp);
        bool on = true;
        for (int i = 0; i < g.d; ++i) on = on && signed_mod(m[i], g.N) % stride == 0;
        double tn = xnorm(sp);
        if (!on || tn == 0 || tn > 0.25) continue;
        std::vector<double> v;
        for (long p = 0; p < P; ++p) {
            if (xnorm(p) <= 2 * tn) continue;
            IVec a = g.unravel(p);
            for (int i = 0; i < g.d; ++i) a[i] -= m[i];
            v.push_back(kn(g.ravel(a), p) * cell);
        }
        double val = tree_sum(v);
        if (val > e.e3) {
            e.e3 = val;
            Vec t = g.coord_per(sp);
            for (auto& x : t) x *= W;
            e.argmax_t = t;
        }
    }
    e.phi_norm = sequence_phi_norm(seq, sigma, fam);
    return e;
}

} // namespace ovtl
