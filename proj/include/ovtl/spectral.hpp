#pragma once
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include <boost/math/quadrature/gauss.hpp>
#include <fftw3.h>

#include "opfield.hpp"

namespace ovtl {

namespace detail {

class PlanCache {
public:
    static PlanCache& instance()
    {
        static PlanCache c;
        return c;
    }
    // in-place plan over `howmany` interleaved d-dim transforms with stride = howmany
    fftw_plan get(int d, long N, int howmany, int sign)
    {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(d, N, howmany, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        int dims[3] = {int(N), int(N), int(N)};
        long total = 1;
        for (int i = 0; i < d; ++i) total *= N;
        std::vector<fftw_complex> scratch(size_t(total) * howmany);
        fftw_plan pl = fftw_plan_many_dft(d, dims, howmany, scratch.data(), nullptr, howmany, 1, scratch.data(), nullptr,
                                          howmany, 1, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_[key] = pl;
        return pl;
    }
    ~PlanCache()
    {
        for (auto& kv : plans_) fftw_destroy_plan(kv.second);
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, long, int, int>, fftw_plan> plans_;
};

inline void dft_inplace(cplx* data, const Grid& g, int howmany, int sign)
{
    fftw_plan pl = PlanCache::instance().get(g.d, g.N, howmany, sign);
    fftw_execute_dft(pl, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

} // namespace detail

// fhat(xi) = sum_s h^d f(s) e^{-2 pi i s.xi}, storage index p <-> xi = grid.freq(p)
inline OperatorField fft_forward(const OperatorField& f)
{
    OperatorField r = f;
    detail::dft_inplace(r.raw().data(), f.grid(), int(f.block()), FFTW_FORWARD);
    r *= f.grid().vol();
    return r;
}

inline OperatorField fft_inverse(const OperatorField& fhat)
{
    OperatorField r = fhat;
    detail::dft_inplace(r.raw().data(), fhat.grid(), int(fhat.block()), FFTW_BACKWARD);
    return r;
}

inline std::vector<cplx> scalar_fft_forward(std::vector<cplx> v, const Grid& g)
{
    detail::dft_inplace(v.data(), g, 1, FFTW_FORWARD);
    for (auto& x : v) x *= g.vol();
    return v;
}

inline std::vector<cplx> scalar_fft_inverse(std::vector<cplx> v, const Grid& g)
{
    detail::dft_inplace(v.data(), g, 1, FFTW_BACKWARD);
    return v;
}

struct Symbol {
    Grid grid;
    std::vector<cplx> values; // storage order of the frequency lattice
    std::string tag = "custom";
    double window = 1; // lattice index k read as physical frequency k / window

    Symbol() = default;
    explicit Symbol(const Grid& g, cplx fill = 1.0) : grid(g), values(g.points(), fill) {}

    cplx operator[](long p) const { return values[p]; }
    cplx& operator[](long p) { return values[p]; }

    Symbol& operator*=(const Symbol& o)
    {
        require_same(grid, o.grid);
        for (size_t i = 0; i < values.size(); ++i) values[i] *= o.values[i];
        tag = tag + "*" + o.tag;
        return *this;
    }
};

inline Symbol operator*(Symbol a, const Symbol& b) { return a *= b; }

template <class F>
Symbol make_symbol(const Grid& g, F fn, std::string tag = "custom", double window = 1)
{
    Symbol m(g);
    m.tag = std::move(tag);
    m.window = window;
    for (long p = 0; p < g.points(); ++p) {
        Vec k = g.freq(p);
        for (int i = 0; i < g.d; ++i) k[i] /= window;
        m.values[p] = fn(k);
    }
    return m;
}

inline OperatorField apply_symbol_hat(const Symbol& m, const OperatorField& fhat)
{
    require_same(m.grid, fhat.grid());
    OperatorField r = fhat;
    size_t b = r.block();
    for (long p = 0; p < r.points(); ++p) {
        cplx c = m.values[p];
        cplx* q = r.raw().data() + p * b;
        for (size_t i = 0; i < b; ++i) q[i] *= c;
    }
    return fft_inverse(r);
}

inline OperatorField apply_symbol(const Symbol& m, const OperatorField& f)
{
    require_same(m.grid, f.grid());
    return apply_symbol_hat(m, fft_forward(f));
}

inline Symbol bessel(const Grid& g, double alpha)
{
    return make_symbol(
        g, [&](const Vec& k) { return cplx(std::pow(1 + std::pow(norm(k, g.d), 2), alpha / 2), 0); },
        "bessel(" + std::to_string(alpha) + ")");
}

inline Symbol riesz(const Grid& g, double alpha)
{
    return make_symbol(
        g,
        [&](const Vec& k) {
            double r = norm(k, g.d);
            // mean mode dropped for every alpha (zero anyway when alpha > 0)
            if (r == 0) return cplx(0, 0);
            return cplx(std::pow(r, alpha), 0);
        },
        "riesz(" + std::to_string(alpha) + ")");
}

// (2 pi i t)^beta, principal branch for non-integer beta
inline cplx derivative_factor(double t, double beta)
{
    double w = 2 * std::numbers::pi * t;
    if (beta == std::round(beta)) {
        long b = long(std::round(beta));
        if (b == 0) return 1.0;
        if (w == 0) return 0.0;
        cplx base(0, w), r = 1.0;
        long e = b < 0 ? -b : b;
        for (long i = 0; i < e; ++i) r *= base;
        return b < 0 ? 1.0 / r : r;
    }
    if (w == 0) return 0.0;
    double sg = w > 0 ? 1.0 : -1.0;
    return std::pow(std::abs(w), beta) * std::exp(cplx(0, std::numbers::pi * beta * sg / 2));
}

inline Symbol derivative(const Grid& g, int axis, double beta)
{
    if (axis < 0 || axis >= g.d) throw DomainError("derivative axis out of range");
    return make_symbol(
        g, [&](const Vec& k) { return derivative_factor(k[axis], beta); },
        "derivative(" + std::to_string(axis) + "," + std::to_string(beta) + ")");
}

// D^gamma for a multi-index
inline Symbol derivative_multi(const Grid& g, const std::array<int, 3>& gamma)
{
    return make_symbol(g, [&](const Vec& k) {
        cplx r = 1.0;
        for (int i = 0; i < g.d; ++i) r *= derivative_factor(k[i], gamma[i]);
        return r;
    }, "D^gamma");
}

inline Symbol poisson_symbol(const Grid& g, double eps)
{
    if (!(eps > 0 && eps <= 1)) throw DomainError("poisson eps must lie in (0,1]");
    return make_symbol(
        g, [&](const Vec& k) { return cplx(std::exp(-2 * std::numbers::pi * eps * norm(k, g.d)), 0); },
        "poisson(" + std::to_string(eps) + ")");
}

inline Symbol poisson_dk_symbol(const Grid& g, double eps, int k)
{
    if (!(eps > 0 && eps <= 1)) throw DomainError("poisson eps must lie in (0,1]");
    if (k < 1) throw DomainError("poisson derivative order must be >= 1");
    return make_symbol(
        g,
        [&](const Vec& xi) {
            double r = norm(xi, g.d);
            return cplx(std::pow(-2 * std::numbers::pi * r, k) * std::exp(-2 * std::numbers::pi * eps * r), 0);
        },
        "poisson_dk(" + std::to_string(eps) + "," + std::to_string(k) + ")");
}

// eta(r) = int_r^2 w / int_1^2 w, w(t) = exp(-a/((t-1)(2-t)))
class EtaProfile {
public:
    explicit EtaProfile(double a = 1.0, int cells = 2048) : a_(a), cells_(cells), tail_(cells + 1, 0.0), head_(cells + 1, 0.0)
    {
        for (int i = cells - 1; i >= 0; --i) tail_[i] = tail_[i + 1] + piece(t(i), t(i + 1));
        for (int i = 1; i <= cells; ++i) head_[i] = head_[i - 1] + piece(t(i - 1), t(i));
        total_ = tail_[0];
    }

    double sharpness() const { return a_; }

    double operator()(double r) const
    {
        if (r <= 1) return 1.0;
        if (r >= 2) return 0.0;
        return r < 1.5 ? 1.0 - head(r) : tail(r);
    }
    // 1 - eta(r), the small side is always integrated directly
    double complement(double r) const
    {
        if (r <= 1) return 0.0;
        if (r >= 2) return 1.0;
        return r < 1.5 ? head(r) : 1.0 - tail(r);
    }

private:
    int cell(double r) const { return std::min(cells_ - 1, int((r - 1) * cells_)); }
    double tail(double r) const
    {
        int i = cell(r);
        return (piece(r, t(i + 1)) + tail_[i + 1]) / total_;
    }
    double head(double r) const
    {
        int i = cell(r);
        return (head_[i] + piece(t(i), r)) / total_;
    }
    double t(int i) const { return 1.0 + double(i) / cells_; }
    double w(double x) const
    {
        double q = (x - 1) * (2 - x);
        return q > 0 ? std::exp(-a_ / q) : 0.0;
    }
    double piece(double lo, double hi) const
    {
        if (hi <= lo) return 0.0;
        return boost::math::quadrature::gauss<double, 20>::integrate([this](double x) { return w(x); }, lo, hi);
    }

    double a_;
    int cells_;
    std::vector<double> tail_, head_;
    double total_ = 1;
};

class LPFamily {
public:
    LPFamily() = default;
    LPFamily(const Grid& g, std::shared_ptr<const EtaProfile> eta) : grid_(g), eta_(std::move(eta))
    {
        if (g.N < 16) throw ResolutionError("grid too small for an LP family");
        j_max_ = ilog2(g.N / 4);
        for (int j = 0; j <= j_max_; ++j)
            members_.push_back(make_symbol(g, [&](const Vec& k) { return cplx(member(j, k, g.d), 0); },
                                           "lp(" + std::to_string(j) + ")"));
    }

    const Grid& grid() const { return grid_; }
    int j_max() const { return j_max_; }
    const Symbol& operator[](int j) const { return members_.at(j); }
    const std::vector<Symbol>& members() const { return members_; }
    const EtaProfile& eta() const { return *eta_; }
    std::string id() const { return "lp(a=" + std::to_string(eta_->sharpness()) + ")"; }

    double eta_at(double r) const { return (*eta_)(r); }
    // base bump phi(xi) = eta(|xi|) - eta(2|xi|)
    double phi(const Vec& xi, int d) const { return bump(norm(xi, d)); }
    double bump(double r) const
    {
        if (r <= 0.5) return 0.0;
        if (r <= 1) return eta_->complement(2 * r);
        return (*eta_)(r);
    }
    double member(int j, const Vec& xi, int d) const
    {
        double r = norm(xi, d);
        if (j == 0) return (*eta_)(r);
        return bump(std::ldexp(r, -j));
    }

private:
    Grid grid_;
    std::shared_ptr<const EtaProfile> eta_;
    int j_max_ = 0;
    std::vector<Symbol> members_;
};

inline LPFamily make_lp_family(const Grid& g, double sharpness = 1.0)
{
    return LPFamily(g, std::make_shared<EtaProfile>(sharpness));
}

struct HomLPFamily {
    Grid grid;
    int j_min = -1, j_max = 0;
    std::vector<Symbol> members; // members[j - j_min]

    const Symbol& operator[](int j) const { return members.at(j - j_min); }
};

inline HomLPFamily make_hom_family(const LPFamily& fam, int j_min, int j_max)
{
    HomLPFamily h;
    h.grid = fam.grid();
    h.j_min = j_min;
    h.j_max = j_max;
    const Grid& g = fam.grid();
    for (int j = j_min; j <= j_max; ++j)
        h.members.push_back(make_symbol(g, [&](const Vec& k) {
            return cplx(fam.bump(std::ldexp(norm(k, g.d), -j)), 0);
        }, "hom(" + std::to_string(j) + ")"));
    return h;
}

struct LPCheck {
    bool support = true, range = true, partition = true;
    double partition_err = 0;
    bool ok() const { return support && range && partition; }
};

inline LPCheck validate_lp_family(const LPFamily& fam, double tol = 4e-16)
{
    LPCheck c;
    const Grid& g = fam.grid();
    for (long p = 0; p < g.points(); ++p) {
        double r = std::sqrt(double(g.freq_norm2(p)));
        double sum = 0;
        for (int j = 0; j <= fam.j_max(); ++j) {
            double v = fam[j][p].real();
            sum += v;
            if (v < 0 || v > 1) c.range = false;
            if (j == 0) {
                if (v != 0 && r > 2) c.support = false;
            } else {
                double lo = std::ldexp(1.0, j - 1), hi = std::ldexp(1.0, j + 1);
                if (v != 0 && (r < lo || r > hi)) c.support = false;
                // closer to the edge than ~1e-2 the exact value underflows double
                if (r > lo * 1.01 && r < hi * 0.99 && !(v > 0)) c.range = false;
            }
        }
        if (r <= std::ldexp(1.0, fam.j_max())) {
            c.partition_err = std::max(c.partition_err, std::abs(sum - 1));
            if (std::abs(sum - 1) > tol) c.partition = false;
        }
    }
    return c;
}

// H^sigma_2 norm: spatial dual of g weighted by (1+|W s_per|^2)^{sigma/2}, g == 1 gives 1
inline double hsigma_norm(const Symbol& g, double sigma)
{
    const Grid& G = g.grid;
    if (!(sigma > G.d / 2.0)) throw DomainError("hsigma_norm requires sigma > d/2");
    std::vector<cplx> v = scalar_fft_inverse(g.values, G);
    double inv = 1.0 / double(G.points()), W = g.window;
    std::vector<double> acc(G.points());
    for (long p = 0; p < G.points(); ++p) {
        Vec s = G.coord_per(p);
        double r2 = 0;
        for (int i = 0; i < G.d; ++i) r2 += (W * s[i]) * (W * s[i]);
        acc[p] = std::norm(v[p] * inv) * std::pow(1 + r2, sigma);
    }
    return std::sqrt(tree_sum(acc));
}

inline double default_sigma(int d) { return d / 2.0 + 0.5; }
inline double default_window(const Grid& g) { return double(g.N) / 4; }

} // namespace ovtl
