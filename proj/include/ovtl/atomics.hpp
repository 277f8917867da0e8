#pragma once
#include <map>

#include "generators.hpp"
#include "normsuite.hpp"

namespace ovtl {

// operator data on the periodic box [origin, origin + ext)^d
class LocalField {
public:
    LocalField() = default;
    LocalField(const Grid& g, int n, const IVec& origin, long ext) : grid_(g), n_(n), ext_(std::min(ext, g.N))
    {
        for (int i = 0; i < 3; ++i) origin_[i] = i < g.d ? wrap(origin[i], g.N) : 0;
        if (ext_ == g.N) origin_ = {0, 0, 0};
        data_.assign(size_t(points()) * n * n, cplx(0));
    }

    const Grid& grid() const { return grid_; }
    int n() const { return n_; }
    long ext() const { return ext_; }
    const IVec& origin() const { return origin_; }
    long points() const
    {
        long p = 1;
        for (int i = 0; i < grid_.d; ++i) p *= ext_;
        return p;
    }
    size_t block() const { return size_t(n_) * n_; }

    MatMap at(long q) { return MatMap(data_.data() + q * block(), n_, n_); }
    CMatMap at(long q) const { return CMatMap(data_.data() + q * block(), n_, n_); }
    std::vector<cplx>& raw() { return data_; }
    const std::vector<cplx>& raw() const { return data_; }

    IVec local_coords(long q) const
    {
        IVec m{0, 0, 0};
        for (int i = grid_.d - 1; i >= 0; --i) {
            m[i] = q % ext_;
            q /= ext_;
        }
        return m;
    }
    long global(long q) const
    {
        IVec m = local_coords(q);
        for (int i = 0; i < grid_.d; ++i) m[i] += origin_[i];
        return grid_.ravel(m);
    }
    // local index of global lattice point p, -1 outside the box
    long local(long p) const
    {
        IVec m = grid_.unravel(p);
        long q = 0;
        for (int i = 0; i < grid_.d; ++i) {
            long u = wrap(m[i] - origin_[i], grid_.N);
            if (u >= ext_) return -1;
            q = q * ext_ + u;
        }
        return q;
    }

    void add_to(OperatorField& f, cplx c = 1.0) const
    {
        require_same(f.grid(), grid_);
        for (long q = 0; q < points(); ++q) f.at(global(q)) += c * at(q);
    }
    OperatorField to_field() const
    {
        OperatorField f(grid_, n_);
        add_to(f);
        return f;
    }
    // adds o into this box; every nonzero point of o must lie inside
    void accumulate(const LocalField& o, cplx c = 1.0)
    {
        for (long q = 0; q < o.points(); ++q) {
            auto b = o.at(q);
            if (b.isZero(0)) continue;
            long t = local(o.global(q));
            if (t < 0) throw Error("local field accumulate outside the window");
            at(t) += c * b;
        }
    }
    static LocalField window(const OperatorField& f, const IVec& origin, long ext)
    {
        LocalField w(f.grid(), f.n(), origin, ext);
        for (long q = 0; q < w.points(); ++q) w.at(q) = f.at(w.global(q));
        return w;
    }

    LocalField& operator*=(cplx c)
    {
        for (auto& x : data_) x *= c;
        return *this;
    }
    double max_abs() const
    {
        double m = 0;
        for (auto& x : data_) m = std::max(m, std::abs(x));
        return m;
    }
    bool is_zero() const
    {
        for (auto& x : data_)
            if (x != cplx(0)) return false;
        return true;
    }

private:
    Grid grid_;
    int n_ = 0;
    long ext_ = 0;
    IVec origin_{0, 0, 0};
    std::vector<cplx> data_;
};

// boxes of centered cubes, their doubles, and the nested corner cubes [c S, (c+1) S)
inline LocalField cube_box(const Grid& g, int n, const DyadicCube& q, bool doubled = false)
{
    long S = cube_width(g, q.mu);
    IVec o{0, 0, 0};
    for (int i = 0; i < g.d; ++i) o[i] = q.l[i] * S - (doubled ? S : S / 2);
    return LocalField(g, n, o, doubled ? 2 * S : S);
}

struct CornerCube {
    int mu = 0;
    IVec c{0, 0, 0};
};

inline LocalField corner_box(const Grid& g, int n, const CornerCube& c)
{
    long S = cube_width(g, c.mu);
    IVec o{0, 0, 0};
    for (int i = 0; i < g.d; ++i) o[i] = c.c[i] * S;
    return LocalField(g, n, o, S);
}

// smallest centered cube holding a corner cube: level mu - 1, index ceil(c/2)
inline DyadicCube enclosing_cube(const CornerCube& c, int d)
{
    DyadicCube q;
    if (c.mu == 0) return q;
    q.mu = c.mu - 1;
    long nc = 1L << q.mu;
    for (int i = 0; i < d; ++i) q.l[i] = wrap((c.c[i] + 1) / 2, nc);
    return q;
}

// ---------------------------------------------------------------- validation

struct Clause {
    std::string name;
    double measured = 0, bound = 0, rel_tol = 0;
    bool pass() const { return measured <= bound * (1 + rel_tol) || measured <= bound + rel_tol * bound; }
    double slack() const { return bound - measured; }
};

struct ValidationReport {
    std::vector<Clause> clauses;

    void add(const std::string& name, double measured, double bound, double rel_tol = 0)
    {
        clauses.push_back({name, measured, bound, rel_tol});
    }
    bool pass() const
    {
        for (auto& c : clauses)
            if (!c.pass()) return false;
        return true;
    }
    const Clause* first_failure() const
    {
        for (auto& c : clauses)
            if (!c.pass()) return &c;
        return nullptr;
    }
    double min_slack() const
    {
        double m = INFINITY;
        for (auto& c : clauses) m = std::min(m, c.slack());
        return m;
    }
    // keep, per clause name, the entry closest to failing
    void merge_worst(const ValidationReport& o, const std::string& prefix)
    {
        for (auto& c : o.clauses) {
            Clause e = c;
            e.name = prefix + c.name;
            auto it = std::find_if(clauses.begin(), clauses.end(), [&](const Clause& x) { return x.name == e.name; });
            auto ratio = [](const Clause& x) { return x.bound > 0 ? x.measured / x.bound : (x.measured > 0 ? INFINITY : 0.0); };
            if (it == clauses.end()) clauses.push_back(e);
            else if (ratio(e) > ratio(*it)) *it = e;
        }
    }
};

// tau( sum h^d a* a )^{1/2}
inline double local_l2_trace(const LocalField& a)
{
    Mat s = Mat::Zero(a.n(), a.n());
    for (long q = 0; q < a.points(); ++q) s += a.at(q).adjoint() * a.at(q);
    return trace_sqrt(s * a.grid().vol());
}

// largest entry of a outside the region accepted by inside(p)
template <class F>
double mass_outside(const LocalField& a, F inside)
{
    double m = 0;
    for (long q = 0; q < a.points(); ++q)
        if (!inside(a.global(q))) m = std::max(m, a.at(q).cwiseAbs().maxCoeff());
    return m;
}

inline std::vector<IVec> multi_indices(int d, int K)
{
    std::vector<IVec> out;
    if (K < 0) return out;
    for (long a = 0; a <= K; ++a)
        for (long b = 0; b <= (d > 1 ? K - a : 0); ++b)
            for (long c = 0; c <= (d > 2 ? K - a - b : 0); ++c) out.push_back({a, b, c});
    std::stable_sort(out.begin(), out.end(), [](const IVec& x, const IVec& y) { return x[0] + x[1] + x[2] < y[0] + y[1] + y[2]; });
    return out;
}

inline long order(const IVec& g) { return g[0] + g[1] + g[2]; }

// tau( int |D^gamma a|^2 )^{1/2} for each gamma, spectral derivatives by Plancherel
inline std::vector<double> derivative_sizes(const OperatorField& fhat, const std::vector<IVec>& gammas)
{
    const Grid& g = fhat.grid();
    int n = fhat.n();
    std::vector<Mat> acc(gammas.size(), Mat::Zero(n, n));
    for (long p = 0; p < g.points(); ++p) {
        auto b = fhat.at(p);
        if (b.isZero(0)) continue;
        Mat gram = b.adjoint() * b;
        Vec xi = g.freq(p);
        for (size_t t = 0; t < gammas.size(); ++t) {
            double w = 1;
            for (int i = 0; i < g.d; ++i) w *= std::pow(2 * std::numbers::pi * xi[i], 2.0 * double(gammas[t][i]));
            if (w != 0) acc[t] += w * gram;
        }
    }
    std::vector<double> out;
    for (auto& a : acc) out.push_back(trace_sqrt(a));
    return out;
}

// tau( int |J^alpha g|^2 )^{1/2}
inline double bessel_size(const OperatorField& fhat, double alpha)
{
    const Grid& g = fhat.grid();
    Mat acc = Mat::Zero(fhat.n(), fhat.n());
    for (long p = 0; p < g.points(); ++p) {
        auto b = fhat.at(p);
        if (b.isZero(0)) continue;
        acc += std::pow(1.0 + double(g.freq_norm2(p)), alpha) * (b.adjoint() * b);
    }
    return trace_sqrt(acc);
}

struct HAtom {
    DyadicCube q;
    LocalField data;
    bool doubled = false; // supported in 2Q
    bool mean_zero_required() const { return q.mu > 0; }
};

struct TentAtom {
    DyadicCube q;
    int j_lo = 1;
    std::vector<LocalField> levels; // levels j_lo, j_lo + 1, ...
    int j_hi() const { return j_lo + int(levels.size()) - 1; }
};

enum class SmoothKind { alpha_one, subatom, alpha_Q };

inline std::string to_string(SmoothKind k)
{
    switch (k) {
    case SmoothKind::alpha_one: return "alpha_one";
    case SmoothKind::subatom: return "subatom";
    default: return "alpha_Q";
    }
}

struct SmoothAtom {
    SmoothKind kind = SmoothKind::alpha_one;
    DyadicCube q;
    LocalField data;
    double alpha = 0;
    int K = 1, L = -1;
    std::vector<cplx> d;          // alpha_Q coefficients d_{mu,l}
    std::vector<SmoothAtom> subs; // alpha_Q subatoms
    double size_constant = 1;     // C in tau(int |J^alpha g|^2)^{1/2} <= C |Q|^{-1/2}
};

constexpr double size_tol = 1e-9;

inline ValidationReport validate_atom(const HAtom& a)
{
    ValidationReport r;
    const Grid& g = a.data.grid();
    double vq = a.q.volume(g.d);
    r.add("support", mass_outside(a.data, [&](long p) { return a.doubled ? in_doubled(g, a.q, p) : cube_contains(g, a.q, p); }), 0);
    r.add("size", local_l2_trace(a.data), 1 / std::sqrt(vq), size_tol);
    if (a.mean_zero_required()) {
        Mat m = Mat::Zero(a.data.n(), a.data.n());
        double scale = 0;
        for (long q = 0; q < a.data.points(); ++q) {
            m += a.data.at(q);
            scale += a.data.at(q).norm();
        }
        r.add("moment", m.norm() * g.vol(), 1e-10 * scale * g.vol());
    }
    return r;
}

inline ValidationReport validate_atom(const TentAtom& a)
{
    ValidationReport r;
    if (a.levels.empty()) return r;
    const Grid& g = a.levels[0].grid();
    double vq = a.q.volume(g.d);
    double out = 0;
    Mat s = Mat::Zero(a.levels[0].n(), a.levels[0].n());
    for (size_t i = 0; i < a.levels.size(); ++i) {
        int j = a.j_lo + int(i);
        const LocalField& lv = a.levels[i];
        if (j < std::max(a.q.mu, 1)) out = std::max(out, lv.max_abs());
        else out = std::max(out, mass_outside(lv, [&](long p) { return cube_contains(g, a.q, p); }));
        for (long q = 0; q < lv.points(); ++q) s += lv.at(q).adjoint() * lv.at(q);
    }
    r.add("support", out, 0);
    r.add("size", trace_sqrt(s * (std::numbers::ln2 * g.vol())), 1 / std::sqrt(vq), size_tol);
    return r;
}

// sum_s h^d ((s - c)_per)^beta a(s) relative to the cube center c
inline Mat moment(const LocalField& a, const DyadicCube& q, const IVec& beta, double* scale = nullptr)
{
    const Grid& g = a.grid();
    long S = cube_width(g, q.mu);
    Mat m = Mat::Zero(a.n(), a.n());
    double sc = 0;
    for (long t = 0; t < a.points(); ++t) {
        IVec x = g.unravel(a.global(t));
        double w = 1;
        for (int i = 0; i < g.d; ++i) w *= std::pow(double(signed_mod(x[i] - q.l[i] * S, g.N)) * g.h(), double(beta[i]));
        m += w * a.at(t);
        sc += std::abs(w) * a.at(t).norm();
    }
    if (scale) *scale = sc * g.vol();
    return m * g.vol();
}

inline ValidationReport validate_atom(const SmoothAtom& a)
{
    ValidationReport r;
    const Grid& g = a.data.grid();
    int d = g.d;
    double vq = a.q.volume(d);
    if (a.kind == SmoothKind::alpha_Q) {
        double d2 = 0;
        for (auto& c : a.d) d2 += std::norm(c);
        r.add("coefficients", std::sqrt(d2), 1 / std::sqrt(vq), size_tol);
        OperatorField gf = a.data.to_field();
        OperatorField gh = fft_forward(gf);
        r.add("bessel_size", bessel_size(gh, a.alpha), a.size_constant / std::sqrt(vq), size_tol);
        OperatorField sum(g, a.data.n());
        double bad_order = 0;
        for (size_t i = 0; i < a.subs.size(); ++i) {
            a.subs[i].data.add_to(sum, a.d[i]);
            if (!subcube_order(a.subs[i].q, a.q, d)) bad_order += 1;
            r.merge_worst(validate_atom(a.subs[i]), "sub.");
        }
        r.add("sub.order", bad_order, 0);
        r.add("sum", max_diff(sum, gf), 1e-10 * std::max(gf.max_abs(), 1e-300));
        return r;
    }
    if (a.kind == SmoothKind::subatom)
        r.add("support", mass_outside(a.data, [&](long p) { return in_doubled(g, a.q, p); }), 0);
    else
        r.add("support", a.q.mu == 0 ? 0.0 : mass_outside(a.data, [&](long p) { return in_doubled(g, a.q, p); }), 0);
    OperatorField fh = fft_forward(a.data.to_field());
    auto gammas = multi_indices(d, a.K);
    auto sizes = derivative_sizes(fh, gammas);
    for (size_t t = 0; t < gammas.size(); ++t) {
        double bound = a.kind == SmoothKind::alpha_one ? 1.0 : std::pow(vq, a.alpha / d - double(order(gammas[t])) / d);
        r.merge_worst(ValidationReport{{{"derivative", sizes[t], bound, size_tol}}}, "");
    }
    if (a.kind == SmoothKind::subatom)
        for (auto& beta : multi_indices(d, a.L)) {
            double scale = 0;
            Mat m = moment(a.data, a.q, beta, &scale);
            r.merge_worst(ValidationReport{{{"moment", m.norm(), 1e-10 * scale}}}, "");
        }
    return r;
}

// ---------------------------------------------------------------- Calderon resolution

struct Kernel {
    long radius = 0;
    std::vector<std::pair<IVec, double>> taps;
};

struct CalderonResolution {
    Grid grid;
    int j_max = 0, m = 1;
    std::string profile = "gauss*bump";
    std::vector<Kernel> kernels; // Phi_j, j = 1..j_max
    std::vector<Symbol> hat;     // Phi_j^
    Symbol low;                  // phi_0^ = 1 - sum_j log2 Phi_j^2

    const Kernel& kernel(int j) const { return kernels.at(j - 1); }
    const Symbol& level(int j) const { return hat.at(j - 1); }
    Symbol psi(int j) const
    {
        Symbol s = level(j);
        for (auto& v : s.values) v *= std::sqrt(std::numbers::ln2);
        return s;
    }
};

// Phi_j = c 2^{-2jm} L_h^m kappa_j, L_h = -(2 pi)^{-2} times the lattice Laplacian, kappa_j a unit-mass
// Gaussian-times-bump of radius (N >> j)/2 - 1 - m lattice points; support stays inside the side-2^{-j} cube
inline CalderonResolution calderon_resolution(const Grid& g, int m = 1, int j_max = -1, const std::string& profile = "gauss*bump")
{
    if (m < 1) throw DomainError("calderon order m must be >= 1");
    if (profile != "gauss*bump" && profile != "bump") throw DomainError("unknown kappa profile " + profile);
    bool gauss = profile == "gauss*bump";
    CalderonResolution c;
    c.grid = g;
    c.m = m;
    c.profile = profile;
    int J = j_max < 0 ? g.log2N() - 2 : j_max;
    while (J >= 1 && (g.N >> J) / 2 - 1 < m) --J;
    if (J < 1) throw ResolutionError("grid too coarse for a Calderon resolution of order " + std::to_string(m));
    c.j_max = J;
    long P = g.points();
    std::vector<std::vector<double>> spatial;
    for (int j = 1; j <= J; ++j) {
        long R = (g.N >> j) / 2 - 1 - m;
        std::vector<double> k(P, 0.0);
        double mass = 0;
        for (long p = 0; p < P; ++p) {
            IVec x = g.unravel(p);
            double r2 = 0;
            for (int i = 0; i < g.d; ++i) r2 += std::pow(double(signed_mod(x[i], g.N)), 2);
            double v = 0;
            if (R >= 1) {
                double rho = std::sqrt(r2) / double(R);
                v = (gauss ? std::exp(-2 * rho * rho) : 1.0) * bump_value(rho);
            } else if (r2 == 0) {
                v = 1;
            }
            k[p] = v;
            mass += v;
        }
        for (auto& v : k) v /= mass * g.vol();
        double lap = -1.0 / (4 * std::numbers::pi * std::numbers::pi) / (g.h() * g.h());
        for (int t = 0; t < m; ++t) {
            std::vector<double> nk(P, 0.0);
            for (long p = 0; p < P; ++p) {
                IVec x = g.unravel(p);
                double s = -2.0 * g.d * k[p];
                for (int i = 0; i < g.d; ++i)
                    for (int sg : {-1, 1}) {
                        IVec y = x;
                        y[i] += sg;
                        s += k[g.ravel(y)];
                    }
                nk[p] = lap * s;
            }
            k.swap(nk);
        }
        for (auto& v : k) v *= std::exp2(-2.0 * j * m);
        spatial.push_back(std::move(k));
    }
    std::vector<double> total(P, 0.0);
    for (auto& k : spatial) {
        std::vector<cplx> v(k.begin(), k.end());
        v = scalar_fft_forward(std::move(v), g);
        Symbol s(g);
        for (long p = 0; p < P; ++p) {
            s.values[p] = cplx(v[p].real(), 0);
            total[p] += std::numbers::ln2 * std::norm(s.values[p]);
        }
        c.hat.push_back(std::move(s));
    }
    double mx = *std::max_element(total.begin(), total.end());
    for (long p = 1; p < P; ++p)
        if (!(total[p] > 0)) throw DomainError("Calderon normalizer vanishes at a nonzero frequency");
    double scale = 1 / std::sqrt(mx);
    c.low = Symbol(g, 0.0);
    c.low.tag = "calderon_low";
    for (int j = 1; j <= J; ++j) {
        Symbol& s = c.hat[j - 1];
        for (auto& v : s.values) v *= scale;
        s.tag = "Phi(" + std::to_string(j) + ")";
        Kernel ker;
        for (long p = 0; p < P; ++p) {
            double v = spatial[j - 1][p] * scale;
            if (v == 0) continue;
            IVec x = g.unravel(p);
            for (int i = 0; i < g.d; ++i) {
                x[i] = signed_mod(x[i], g.N);
                ker.radius = std::max(ker.radius, std::abs(x[i]));
            }
            ker.taps.push_back({x, v});
        }
        c.kernels.push_back(std::move(ker));
    }
    for (long p = 0; p < P; ++p) {
        double t = 0;
        for (int j = 1; j <= J; ++j) t += std::numbers::ln2 * std::norm(c.hat[j - 1][p]);
        c.low.values[p] = cplx(std::max(0.0, 1 - t), 0);
    }
    return c;
}

inline int calderon_order(double alpha, int L) { return std::max({1, int(std::ceil((L + 1) / 2.0)), int(std::ceil(alpha / 2))}); }

// F_j = w_j Phi_j * f
inline StripField calderon_strip(const OperatorField& f, const CalderonResolution& c, double alpha = 0)
{
    require_same(f.grid(), c.grid);
    StripField F(f.grid(), f.n(), c.j_max);
    OperatorField fh = fft_forward(f);
    for (int j = 1; j <= c.j_max; ++j) {
        F.level(j) = apply_symbol_hat(c.level(j), fh);
        if (alpha != 0) F.level(j) *= std::exp2(j * alpha);
    }
    return F;
}

inline void require_mean_free(const CalderonResolution& c)
{
    for (int j = 1; j <= c.j_max; ++j)
        if (std::abs(c.level(j)[0]) > 1e-13) throw DomainError("Phi level " + std::to_string(j) + " has nonzero mean");
}

// pi_Phi(F) = sum_j log2 Phi_j * F_j
inline OperatorField project_tent(const StripField& F, const CalderonResolution& c)
{
    require_same(F.grid(), c.grid);
    require_mean_free(c);
    if (F.j_max() > c.j_max) throw ResolutionError("strip deeper than the Calderon resolution");
    OperatorField acc(F.grid(), F.n());
    for (int j = 1; j <= F.j_max(); ++j) {
        OperatorField fh = fft_forward(F.level(j));
        const Symbol& s = c.level(j);
        for (long p = 0; p < acc.points(); ++p) acc.at(p) += (std::numbers::ln2 * s[p].real()) * fh.at(p);
    }
    return fft_inverse(acc);
}

// Phi_j * a = sum_y h^d Phi_j(y) a(. - y) on the box grown by the kernel radius; direct taps for small boxes, FFT otherwise
inline LocalField convolve_local(const LocalField& a, const CalderonResolution& c, int j, double w = 1)
{
    const Grid& g = a.grid();
    const Kernel& k = c.kernel(j);
    IVec o = a.origin();
    for (int i = 0; i < g.d; ++i) o[i] -= k.radius;
    LocalField out(g, a.n(), o, a.ext() + 2 * k.radius);
    double direct = double(a.points()) * double(k.taps.size());
    double spectral = 8.0 * double(g.points()) * (1 + g.log2N() * g.d);
    if (direct <= spectral) {
        for (long q = 0; q < a.points(); ++q) {
            auto b = a.at(q);
            if (b.isZero(0)) continue;
            IVec x = g.unravel(a.global(q));
            for (auto& [u, v] : k.taps) {
                IVec y = x;
                for (int i = 0; i < g.d; ++i) y[i] += u[i];
                long t = out.local(g.ravel(y));
                out.at(t) += (w * v * g.vol()) * b;
            }
        }
        return out;
    }
    OperatorField r = apply_symbol(c.level(j), a.to_field());
    for (long q = 0; q < out.points(); ++q) out.at(q) = w * r.at(out.global(q));
    return out;
}

// pi_Phi of a tent atom, on the box of 2Q
inline LocalField project_tent(const TentAtom& a, const CalderonResolution& c)
{
    require_mean_free(c);
    if (a.levels.empty()) throw DomainError("empty tent atom");
    const Grid& g = a.levels[0].grid();
    LocalField out = cube_box(g, a.levels[0].n(), a.q, true);
    for (size_t i = 0; i < a.levels.size(); ++i) {
        int j = a.j_lo + int(i);
        if (a.levels[i].is_zero()) continue;
        if (j > c.j_max) throw ResolutionError("tent atom deeper than the Calderon resolution");
        out.accumulate(convolve_local(a.levels[i], c, j, std::numbers::ln2));
    }
    return out;
}

// ---------------------------------------------------------------- tent atomization

struct TentTerm {
    double lambda = 0;
    TentAtom atom;
    CornerCube corner;
};

struct TentDecomposition {
    std::vector<TentTerm> terms;
    double mass = 0, tent_norm = 0, residual = 0;
    double mass_ratio() const { return tent_norm > 0 ? mass / tent_norm : 0.0; }
};

inline StripField reconstruct(const TentDecomposition& t, const Grid& g, int n, int j_max)
{
    StripField F(g, n, j_max);
    for (auto& term : t.terms)
        for (size_t i = 0; i < term.atom.levels.size(); ++i)
            term.atom.levels[i].add_to(F.level(term.atom.j_lo + int(i)), term.lambda);
    return F;
}

namespace detail {

inline long corner_id(const CornerCube& c, int d)
{
    long nc = 1L << c.mu, id = 0;
    for (int i = 0; i < d; ++i) id = id * nc + c.c[i];
    return id;
}

inline CornerCube corner_from_id(int mu, long id, int d)
{
    CornerCube c;
    c.mu = mu;
    long nc = 1L << mu;
    for (int i = d - 1; i >= 0; --i) {
        c.c[i] = id % nc;
        id /= nc;
    }
    return c;
}

} // namespace detail

// minimal-mass partition of the strip into whole tents T(C) or boxes C x {j = mu} over the nested corner
// cubes C; each piece becomes a tent atom on the centered cube one level up that holds C
inline TentDecomposition tent_atomize(const StripField& F, double drop_tol = 1e-14)
{
    const Grid& g = F.grid();
    int d = g.d, n = F.n(), J = F.j_max();
    if ((g.N >> J) < 1) throw ResolutionError("strip deeper than the lattice");
    double vol = g.vol(), ln2 = std::numbers::ln2;
    // box Grams per level, tent Grams bottom-up
    std::vector<std::vector<Mat>> box(J + 1), tent(J + 1);
    for (int mu = 0; mu <= J; ++mu) {
        long nc = 1L << (mu * d);
        box[mu].assign(nc, Mat::Zero(n, n));
        if (mu == 0) continue;
        long S = cube_width(g, mu);
        const OperatorField& lv = F.level(mu);
        for (long p = 0; p < g.points(); ++p) {
            IVec x = g.unravel(p);
            CornerCube c{mu, {0, 0, 0}};
            for (int i = 0; i < d; ++i) c.c[i] = x[i] / S;
            box[mu][detail::corner_id(c, d)].noalias() += (ln2 * vol) * (lv.at(p).adjoint() * lv.at(p));
        }
    }
    auto children = [&](const CornerCube& c) {
        std::vector<long> out;
        long kids = 1L << d;
        for (long b = 0; b < kids; ++b) {
            CornerCube k{c.mu + 1, {0, 0, 0}};
            for (int i = 0; i < d; ++i) k.c[i] = 2 * c.c[i] + ((b >> i) & 1);
            out.push_back(detail::corner_id(k, d));
        }
        return out;
    };
    auto weight = [&](const CornerCube& c) { return std::sqrt(enclosing_cube(c, d).volume(d)); };
    std::vector<std::vector<double>> best(J + 1);
    std::vector<std::vector<char>> whole(J + 1);
    for (int mu = J; mu >= 0; --mu) {
        long nc = 1L << (mu * d);
        tent[mu].assign(nc, Mat::Zero(n, n));
        best[mu].assign(nc, 0.0);
        whole[mu].assign(nc, 1);
        for (long id = 0; id < nc; ++id) {
            CornerCube c = detail::corner_from_id(mu, id, d);
            Mat t = box[mu][id];
            double split = weight(c) * trace_sqrt(box[mu][id]);
            if (mu < J)
                for (long k : children(c)) {
                    t += tent[mu + 1][k];
                    split += best[mu + 1][k];
                }
            tent[mu][id] = t;
            double w = weight(c) * trace_sqrt(t);
            whole[mu][id] = w <= split;
            best[mu][id] = std::min(w, split);
        }
    }
    TentDecomposition out;
    std::vector<TentTerm> raw;
    auto emit = [&](const CornerCube& c, int j_lo, int j_hi, double lam) {
        if (!(lam > 0)) return;
        TentTerm t;
        t.lambda = lam;
        t.corner = c;
        t.atom.q = enclosing_cube(c, d);
        t.atom.j_lo = j_lo;
        for (int j = j_lo; j <= j_hi; ++j) {
            LocalField w = corner_box(g, n, c);
            for (long q = 0; q < w.points(); ++q) w.at(q) = F.level(j).at(w.global(q)) / lam;
            t.atom.levels.push_back(std::move(w));
        }
        raw.push_back(std::move(t));
    };
    std::vector<CornerCube> stack{CornerCube{}};
    while (!stack.empty()) {
        CornerCube c = stack.back();
        stack.pop_back();
        long id = detail::corner_id(c, d);
        int j_lo = std::max(c.mu, 1);
        if (whole[c.mu][id]) {
            if (j_lo <= J) emit(c, j_lo, J, weight(c) * trace_sqrt(tent[c.mu][id]));
            continue;
        }
        if (c.mu >= 1) emit(c, c.mu, c.mu, weight(c) * trace_sqrt(box[c.mu][id]));
        auto kids = children(c);
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(detail::corner_from_id(c.mu + 1, *it, d));
    }
    double total = 0;
    for (auto& t : raw) total += t.lambda;
    for (auto& t : raw)
        if (t.lambda > drop_tol * total) {
            out.mass += t.lambda;
            out.terms.push_back(std::move(t));
        }
    std::stable_sort(out.terms.begin(), out.terms.end(), [&](const TentTerm& a, const TentTerm& b) {
        if (a.corner.mu != b.corner.mu) return a.corner.mu < b.corner.mu;
        long ia = detail::corner_id(a.corner, d), ib = detail::corner_id(b.corner, d);
        if (ia != ib) return ia < ib;
        return a.atom.j_lo < b.atom.j_lo;
    });
    if (J >= 1) {
        ConeIndex cone = cone_index(g, J);
        out.tent_norm = trace_lp_norm(tent_functional(F, cone), 1);
    }
    StripField back = reconstruct(out, g, n, J);
    double err = 0, ref = 0;
    for (int j = 1; j <= J; ++j) {
        err = std::max(err, max_diff(back.level(j), F.level(j)));
        ref = std::max(ref, F.level(j).max_abs());
    }
    out.residual = ref > 0 ? err / ref : 0.0;
    return out;
}

// random tent atom on Q with full size |Q|^{-1/2}
inline TentAtom random_tent_atom(const Grid& g, int n, const DyadicCube& q, int j_max, CounterRng& rng)
{
    TentAtom a;
    a.q = q;
    a.j_lo = std::max(q.mu, 1);
    for (int j = a.j_lo; j <= j_max; ++j) {
        LocalField w = cube_box(g, n, q);
        for (auto& x : w.raw()) x = rng.cnormal();
        a.levels.push_back(std::move(w));
    }
    double s = validate_atom(a).clauses[1].measured;
    double target = 1 / std::sqrt(q.volume(g.d));
    for (auto& lv : a.levels) lv *= target / s;
    return a;
}

// ---------------------------------------------------------------- smooth decompositions

struct AtomEntry {
    std::string kind; // h_low, h_atom, alpha_one, alpha_Q
    cplx coef = 0;
    double multiple = 1; // bounded multiple moved into the coefficient
    std::optional<HAtom> h;
    std::optional<SmoothAtom> s;
    ValidationReport report;

    const DyadicCube& cube() const { return h ? h->q : s->q; }
    const LocalField& data() const { return h ? h->data : s->data; }
};

struct AtomicDecomposition {
    std::string target;
    Grid grid;
    int n = 0;
    double alpha = 0;
    int K = 0, L = -1, m = 1;
    std::vector<AtomEntry> atoms;
    double mass = 0, source_norm = 0, residual = 0, tent_mass_ratio = 0;

    double mass_ratio() const { return source_norm > 0 ? mass / source_norm : 0.0; }
    bool all_valid() const
    {
        for (auto& a : atoms)
            if (!a.report.pass()) return false;
        return true;
    }
    OperatorField reconstruct() const
    {
        OperatorField f(grid, n);
        for (auto& a : atoms) a.data().add_to(f, a.coef);
        return f;
    }
};

namespace detail {

inline void finish(AtomicDecomposition& D, const OperatorField& f)
{
    D.mass = 0;
    for (auto& a : D.atoms) D.mass += std::abs(a.coef);
    double nf = l2_norm(f);
    D.residual = nf > 0 ? l2_norm(D.reconstruct() - f) / nf : 0.0;
}

} // namespace detail

struct DecomposeOptions {
    double drop_tol = 1e-14;
    double size_constant = 1; // C for the alpha_Q Bessel size condition
    std::string profile = "gauss*bump";
};

inline AtomicDecomposition smooth_decompose_h1(const OperatorField& f, const DecomposeOptions& opt = {})
{
    const Grid& g = f.grid();
    AtomicDecomposition D;
    D.target = "h1";
    D.grid = g;
    D.n = f.n();
    CalderonResolution cal = calderon_resolution(g, 1, -1, opt.profile);
    D.m = cal.m;
    LPFamily fam = make_lp_family(g);
    D.source_norm = hardy_norm(f, 1, fam).value;
    if (f.is_zero()) return D;
    OperatorField low = apply_symbol(cal.low, f);
    double mu0 = trace_sqrt(integrate(gram(low)));
    if (mu0 > 0) {
        HAtom b{DyadicCube{}, LocalField::window(low, {0, 0, 0}, g.N), false};
        b.data *= 1 / mu0;
        AtomEntry e{"h_low", mu0, 1, b, std::nullopt, validate_atom(b)};
        D.atoms.push_back(std::move(e));
    }
    TentDecomposition T = tent_atomize(calderon_strip(f, cal), opt.drop_tol);
    D.tent_mass_ratio = T.mass_ratio();
    for (auto& t : T.terms) {
        LocalField gq = project_tent(t.atom, cal);
        double vq = t.atom.q.volume(g.d);
        double kappa = std::max(1.0, local_l2_trace(gq) * std::sqrt(vq));
        gq *= 1 / kappa;
        HAtom a{t.atom.q, std::move(gq), true};
        AtomEntry e{"h_atom", t.lambda * kappa, kappa, a, std::nullopt, validate_atom(a)};
        D.atoms.push_back(std::move(e));
    }
    detail::finish(D, f);
    return D;
}

inline void check_smoothness_orders(double alpha, int K, int L)
{
    int kmin = std::max(0, int(std::floor(alpha)) + 1), lmin = std::max(int(std::floor(-alpha)), -1);
    if (K < kmin || L < lmin)
        throw DomainError("need K >= " + std::to_string(kmin) + " and L >= " + std::to_string(lmin) + " at alpha = " + fmt_double(alpha));
}

// (alpha,Q)-atom g = pi_Phi(2^{-j alpha} a) / c sliced into subatoms on the centered level-j cells;
// c is the normalizer moved into the coefficient, empty when the projection vanishes
inline std::optional<SmoothAtom> smooth_atom_from_tent(const TentAtom& t, const CalderonResolution& cal, double alpha, int K, int L,
                                                       double size_constant = 1, double* normalizer = nullptr)
{
    const Grid& g = cal.grid;
    int d = g.d, n = t.levels.at(0).n();
    auto gammas = multi_indices(d, K);
    const DyadicCube& Q = t.q;
    double vq = Q.volume(d);
    SmoothAtom A;
    A.kind = SmoothKind::alpha_Q;
    A.q = Q;
    A.alpha = alpha;
    A.K = K;
    A.L = L;
    A.size_constant = size_constant;
    A.data = cube_box(g, n, Q, true);
    for (size_t i = 0; i < t.levels.size(); ++i) {
        int j = t.j_lo + int(i);
        const LocalField& lv = t.levels[i];
        // slice level j into centered level-j cells
        std::map<long, LocalField> cells;
        for (long q = 0; q < lv.points(); ++q) {
            auto b = lv.at(q);
            if (b.isZero(0)) continue;
            long p = lv.global(q);
            DyadicCube c = cube_of(g, j, p);
            long id = cube_id(c, d);
            auto it = cells.find(id);
            if (it == cells.end()) it = cells.emplace(id, cube_box(g, n, c)).first;
            it->second.at(it->second.local(p)) = std::exp2(-j * alpha) * b;
        }
        for (auto& [id, piece] : cells) {
            DyadicCube c = cube_from_id(j, id, d);
            LocalField raw = convolve_local(piece, cal, j, std::numbers::ln2);
            auto sz = derivative_sizes(fft_forward(raw.to_field()), gammas);
            double dd = 0;
            double vc = c.volume(d);
            for (size_t k = 0; k < gammas.size(); ++k)
                dd = std::max(dd, sz[k] / std::pow(vc, alpha / d - double(order(gammas[k])) / d));
            if (!(dd > 0)) continue;
            A.data.accumulate(raw);
            SmoothAtom s;
            s.kind = SmoothKind::subatom;
            s.q = c;
            s.alpha = alpha;
            s.K = K;
            s.L = L;
            s.data = std::move(raw);
            s.data *= 1 / dd;
            A.d.push_back(dd);
            A.subs.push_back(std::move(s));
        }
    }
    if (A.subs.empty()) return std::nullopt;
    double d2 = 0;
    for (auto& x : A.d) d2 += std::norm(x);
    double jsz = bessel_size(fft_forward(A.data.to_field()), alpha);
    double c = std::max(std::sqrt(d2 * vq), jsz * std::sqrt(vq) / size_constant);
    A.data *= 1 / c;
    for (auto& x : A.d) x /= c;
    if (normalizer) *normalizer = c;
    return A;
}

inline AtomicDecomposition smooth_decompose_tl(const OperatorField& f, double alpha, int K, int L, const DecomposeOptions& opt = {})
{
    check_smoothness_orders(alpha, K, L);
    const Grid& g = f.grid();
    int d = g.d, n = f.n();
    AtomicDecomposition D;
    D.target = "tl";
    D.grid = g;
    D.n = n;
    D.alpha = alpha;
    D.K = K;
    D.L = L;
    CalderonResolution cal = calderon_resolution(g, calderon_order(alpha, L), -1, opt.profile);
    D.m = cal.m;
    LPFamily fam = make_lp_family(g);
    D.source_norm = tl_norm_column(f, alpha, 1, fam).value;
    if (f.is_zero()) return D;
    auto gammas = multi_indices(d, K);
    OperatorField low = apply_symbol(cal.low, f);
    auto lsz = derivative_sizes(fft_forward(low), gammas);
    double mu0 = *std::max_element(lsz.begin(), lsz.end());
    if (mu0 > 0) {
        SmoothAtom b;
        b.kind = SmoothKind::alpha_one;
        b.data = LocalField::window(low, {0, 0, 0}, g.N);
        b.data *= 1 / mu0;
        b.alpha = alpha;
        b.K = K;
        b.L = L;
        AtomEntry e{"alpha_one", mu0, 1, std::nullopt, b, validate_atom(b)};
        D.atoms.push_back(std::move(e));
    }

    TentDecomposition T = tent_atomize(calderon_strip(f, cal, alpha), opt.drop_tol);
    D.tent_mass_ratio = T.mass_ratio();
    for (auto& t : T.terms) {
        double c = 0;
        std::optional<SmoothAtom> A = smooth_atom_from_tent(t.atom, cal, alpha, K, L, opt.size_constant, &c);
        if (!A) continue;
        AtomEntry e{"alpha_Q", t.lambda * c, c, std::nullopt, std::move(*A), {}};
        e.report = validate_atom(*e.s);
        D.atoms.push_back(std::move(e));
    }
    detail::finish(D, f);
    return D;
}

// ---------------------------------------------------------------- pointwise multipliers

struct PointwiseResult {
    double ratio = 0, bound = 0, margin = 10;
    int k = 0;
    bool pass() const { return ratio <= margin * bound * (1 + 1e-12); }
};

// sum_{|gamma| <= k} sup_s ||D^gamma h(s)||_op
inline double derivative_sup_bound(const OperatorField& h, int k)
{
    const Grid& g = h.grid();
    double b = 0;
    for (auto& gam : multi_indices(g.d, k)) {
        OperatorField dh = apply_symbol(derivative_multi(g, {int(gam[0]), int(gam[1]), int(gam[2])}), h);
        double s = 0;
        for (long p = 0; p < g.points(); ++p) s = std::max(s, op_norm(dh.mat(p)));
        b += s;
    }
    return b;
}

inline PointwiseResult pointwise_multiply_test(const OperatorField& h, const OperatorField& f, double alpha, const LPFamily& fam,
                                               int k = -1, double margin = 10)
{
    PointwiseResult r;
    r.k = k >= 0 ? k : std::max(1, int(std::floor(std::abs(alpha))) + 1);
    r.margin = margin;
    r.bound = derivative_sup_bound(h, r.k);
    double nf = tl_norm_column(f, alpha, 1, fam).value;
    r.ratio = nf > 0 ? tl_norm_column(multiply(h, f), alpha, 1, fam).value / nf : 0.0;
    return r;
}

} // namespace ovtl
