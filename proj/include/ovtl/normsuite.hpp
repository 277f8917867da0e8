#pragma once
#include <optional>

#include "report.hpp"
#include "sqfn.hpp"

namespace ovtl {

struct NormReport {
    std::string name;
    std::vector<std::pair<std::string, std::string>> params;
    double value = 0;
    std::vector<std::pair<std::string, double>> terms;
    int d = 0;
    long N = 0;
    int n = 0;
    unsigned long long seed = 0;
    bool upper_bound = false;

    NormReport& param(const std::string& k, double v)
    {
        params.emplace_back(k, fmt_double(v));
        return *this;
    }
    NormReport& param(const std::string& k, const std::string& v)
    {
        params.emplace_back(k, v);
        return *this;
    }
    NormReport& term(const std::string& k, double v)
    {
        terms.emplace_back(k, v);
        return *this;
    }
    double term(const std::string& k) const
    {
        for (auto& t : terms)
            if (t.first == k) return t.second;
        throw DomainError("no term " + k + " in report " + name);
    }

    Section to_section() const
    {
        Section s{"norm." + name, {}};
        s.set("name", name);
        for (auto& p : params) s.set(p.first, p.second);
        s.set("value", value);
        for (auto& t : terms) s.set("term." + t.first, t.second);
        s.set("upper_bound", upper_bound);
        s.set("grid.d", d);
        s.set("grid.N", N);
        s.set("matrix.n", n);
        s.set("seed", seed);
        return s;
    }
};

inline NormReport new_report(const std::string& name, const OperatorField& f)
{
    NormReport r;
    r.name = name;
    r.d = f.grid().d;
    r.N = f.grid().N;
    r.n = f.n();
    return r;
}

inline void check_finite_p(double p)
{
    if (!(p >= 1) || std::isinf(p)) throw DomainError("p must lie in [1, inf)");
}

inline NormReport tl_norm_column(const OperatorField& f, double alpha, double p, const LPFamily& fam)
{
    check_finite_p(p);
    require_same(f.grid(), fam.grid());
    NormReport r = new_report("F_col", f);
    r.param("alpha", alpha).param("p", p).param("kernel", fam.id());
    r.value = trace_lp_norm(g_radial(f, lp_spec(fam, alpha)), p);
    return r;
}

inline NormReport tl_norm_row(const OperatorField& f, double alpha, double p, const LPFamily& fam)
{
    NormReport r = tl_norm_column(adjoint(f), alpha, p, fam);
    r.name = "F_row";
    return r;
}

struct Split {
    OperatorField g, h;
};

inline NormReport tl_norm_mixture(const OperatorField& f, double alpha, double p, const LPFamily& fam,
                                  const std::vector<Split>& splits = {})
{
    check_finite_p(p);
    double scale = std::max(1.0, f.max_abs());
    for (auto& s : splits)
        if (max_diff(s.g + s.h, f) > 1e-12 * scale) throw ValidationError("candidate split does not sum to f");
    NormReport r = new_report("F_mix", f);
    r.param("alpha", alpha).param("p", p).param("kernel", fam.id());
    double col = tl_norm_column(f, alpha, p, fam).value, row = tl_norm_row(f, alpha, p, fam).value;
    r.term("column", col).term("row", row);
    if (p > 2) {
        r.value = std::max(col, row);
        return r;
    }
    double best = std::min(col, row);
    for (auto& s : splits)
        best = std::min(best, tl_norm_column(s.g, alpha, p, fam).value + tl_norm_row(s.h, alpha, p, fam).value);
    r.term("candidates", double(splits.size() + 2));
    r.value = best;
    r.upper_bound = true;
    return r;
}

enum class HardyMode { lp, poisson };

inline std::string to_string(HardyMode m) { return m == HardyMode::lp ? "lp" : "poisson"; }

inline NormReport hardy_norm(const OperatorField& f, double p, const LPFamily& fam, HardyMode mode = HardyMode::lp,
                             Shape shape = Shape::radial)
{
    check_finite_p(p);
    const Grid& g = f.grid();
    NormReport r = new_report("h", f);
    r.param("p", p).param("mode", to_string(mode)).param("shape", to_string(shape));
    if (mode == HardyMode::lp) {
        r.param("kernel", fam.id());
        double low = trace_lp_norm(apply_symbol(fam[0], f), p);
        if (shape == Shape::radial) {
            double sq = trace_lp_norm(g_radial(f, lp_spec(fam, 0, false)), p);
            r.value = trace_lp_norm(g_radial(f, lp_spec(fam, 0, true)), p);
            r.term("square", sq).term("low", low);
        } else {
            ConeIndex cone = cone_index(g, fam.j_max());
            double sq = trace_lp_norm(s_conic(f, lp_spec(fam, 0, false), cone), p);
            r.term("square", sq).term("low", low);
            r.value = sq + low;
        }
        return r;
    }
    double low = trace_lp_norm(apply_symbol(poisson_symbol(g, 1.0), f), p);
    double sq;
    if (shape == Shape::radial) {
        sq = trace_lp_norm(g_radial(f, poisson_spec(g, poisson_levels(g))), p);
        r.param("levels", double(poisson_levels(g)));
    } else {
        int top = g.log2N() - 1;
        ConeIndex cone = cone_index(g, top);
        sq = trace_lp_norm(s_conic(f, poisson_spec(g, top), cone), p);
        r.param("levels", double(top));
    }
    r.term("square", sq).term("low", low);
    r.value = sq + low;
    return r;
}

// integral of f over each level-mu cube, indexed by cube_id
inline std::vector<Mat> cube_sums(const OperatorField& f, int mu)
{
    const Grid& g = f.grid();
    long nc = 1L << (mu * g.d);
    std::vector<Mat> s(nc, Mat::Zero(f.n(), f.n()));
    for (long p = 0; p < f.points(); ++p) s[cube_id(cube_of(g, mu, p), g.d)] += f.at(p);
    for (auto& m : s) m *= g.vol();
    return s;
}

inline NormReport bmo_norm(const OperatorField& f)
{
    const Grid& g = f.grid();
    NormReport r = new_report("bmo", f);
    double unit = std::sqrt(std::max(0.0, max_eigenvalue(integrate(gram(f)))));
    double osc = 0;
    int arg_mu = 0;
    long arg_id = 0;
    for (int mu = 1; (g.N >> mu) >= 2; ++mu) {
        double vq = std::ldexp(1.0, -mu * g.d);
        std::vector<Mat> mean = cube_sums(f, mu);
        for (auto& m : mean) m /= vq;
        std::vector<Mat> acc(mean.size(), Mat::Zero(f.n(), f.n()));
        for (long p = 0; p < f.points(); ++p) {
            long id = cube_id(cube_of(g, mu, p), g.d);
            Mat u = f.at(p) - mean[id];
            acc[id] += u.adjoint() * u;
        }
        for (size_t id = 0; id < acc.size(); ++id) {
            double v = std::sqrt(std::max(0.0, max_eigenvalue(acc[id] * (g.vol() / vq))));
            if (v > osc) {
                osc = v;
                arg_mu = mu;
                arg_id = long(id);
            }
        }
    }
    r.term("oscillation", osc).term("unit", unit).term("argmax.mu", arg_mu).term("argmax.cube", double(arg_id));
    r.value = std::max(osc, unit);
    return r;
}

inline NormReport tl_infty_norm(const OperatorField& f, double alpha, const LPFamily& fam)
{
    const Grid& g = f.grid();
    require_same(g, fam.grid());
    NormReport r = new_report("F_inf", f);
    r.param("alpha", alpha).param("kernel", fam.id());
    OperatorField fhat = fft_forward(f);
    double low = trace_lp_norm(apply_symbol_hat(fam[0], fhat), INFINITY);
    int J = fam.j_max();
    // suffix[j] = sum_{i >= j} 2^{2 i alpha} |phi_i f|^2
    std::vector<OperatorField> suffix(J + 2, OperatorField(g, f.n()));
    for (int j = J; j >= 1; --j) {
        suffix[j] = suffix[j + 1];
        PSDAccumulator acc(g, f.n());
        acc.add_gram(std::exp2(2 * j * alpha), apply_symbol_hat(fam[j], fhat));
        suffix[j] += acc.field();
    }
    double car = 0;
    for (int mu = 1; (g.N >> mu) >= 2; ++mu) {
        if (mu > J) break;
        double vq = std::ldexp(1.0, -mu * g.d);
        for (auto& m : cube_sums(suffix[mu], mu)) car = std::max(car, std::sqrt(std::max(0.0, max_eigenvalue(m / vq))));
    }
    r.term("low", low).term("carleson", car);
    r.value = low + car;
    return r;
}

inline NormReport tent_norm(const StripField& F, double p, const ConeIndex& cone)
{
    check_finite_p(p);
    NormReport r;
    r.name = "T";
    r.d = F.grid().d;
    r.N = F.grid().N;
    r.n = F.n();
    r.param("p", p);
    r.value = trace_lp_norm(tent_functional(F, cone), p);
    return r;
}

inline NormReport homogeneous_equiv_report(const OperatorField& f, double alpha, double p, const LPFamily& fam,
                                           const HomLPFamily& hom)
{
    if (!(alpha > 0)) throw DomainError("homogeneous equivalence needs alpha > 0");
    check_finite_p(p);
    NormReport r = new_report("F_hom", f);
    r.param("alpha", alpha).param("p", p).param("kernel", fam.id()).param("j_min", double(hom.j_min));
    OperatorField fhat = fft_forward(f);
    double F = tl_norm_column(f, alpha, p, fam).value;
    double low = trace_lp_norm(apply_symbol_hat(fam[0], fhat), p);
    SquareFunctionSpec s;
    s.kernel_id = "hom";
    s.alpha = alpha;
    s.include_zero_term = false;
    for (int j = hom.j_min; j <= hom.j_max; ++j) s.levels.push_back({j, hom[j], std::exp2(2 * j * alpha)});
    double homt = trace_lp_norm(g_radial(f, s), p);
    double lp = trace_lp_norm(f, p);
    r.term("inhomogeneous", F).term("low", low).term("homogeneous", homt).term("lp", lp);
    r.term("ratio_low", (low + homt) > 0 ? F / (low + homt) : 0.0);
    r.term("ratio_lp", (lp + homt) > 0 ? F / (lp + homt) : 0.0);
    r.value = F;
    return r;
}

} // namespace ovtl
