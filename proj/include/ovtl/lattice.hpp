#pragma once
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"

namespace ovtl {

using Vec = std::array<double, 3>;
using IVec = std::array<long, 3>;

inline bool is_pow2(long x) { return x > 0 && (x & (x - 1)) == 0; }

inline int ilog2(long x)
{
    int r = 0;
    while ((1L << (r + 1)) <= x) ++r;
    return r;
}

inline long wrap(long m, long N)
{
    m %= N;
    return m < 0 ? m + N : m;
}

// signed representative in [-N/2, N/2)
inline long signed_mod(long m, long N)
{
    m = wrap(m, N);
    return m >= N / 2 ? m - N : m;
}

struct Grid {
    int d = 1;
    long N = 16;

    Grid() = default;
    Grid(int d_, long N_) : d(d_), N(N_)
    {
        if (d < 1 || d > 3) throw DomainError("grid dimension must be 1, 2 or 3");
        if (!is_pow2(N) || N < 16) throw DomainError("grid size must be a power of two >= 16");
    }

    double h() const { return 1.0 / double(N); }
    double vol() const { return std::pow(h(), d); }
    long points() const
    {
        long p = 1;
        for (int i = 0; i < d; ++i) p *= N;
        return p;
    }
    int log2N() const { return ilog2(N); }

    // axis 0 is slowest
    IVec unravel(long p) const
    {
        IVec m{0, 0, 0};
        for (int i = d - 1; i >= 0; --i) {
            m[i] = p % N;
            p /= N;
        }
        return m;
    }
    long ravel(const IVec& m) const
    {
        long p = 0;
        for (int i = 0; i < d; ++i) p = p * N + wrap(m[i], N);
        return p;
    }
    // integer frequency of storage index p
    Vec freq(long p) const
    {
        IVec m = unravel(p);
        Vec k{0, 0, 0};
        for (int i = 0; i < d; ++i) k[i] = double(signed_mod(m[i], N));
        return k;
    }
    long freq_norm2(long p) const
    {
        IVec m = unravel(p);
        long s = 0;
        for (int i = 0; i < d; ++i) {
            long k = signed_mod(m[i], N);
            s += k * k;
        }
        return s;
    }
    Vec coord(long p) const
    {
        IVec m = unravel(p);
        Vec s{0, 0, 0};
        for (int i = 0; i < d; ++i) s[i] = double(m[i]) * h();
        return s;
    }
    // signed periodic coordinate in [-1/2,1/2)^d
    Vec coord_per(long p) const
    {
        IVec m = unravel(p);
        Vec s{0, 0, 0};
        for (int i = 0; i < d; ++i) s[i] = double(signed_mod(m[i], N)) * h();
        return s;
    }

    bool operator==(const Grid& o) const { return d == o.d && N == o.N; }
    bool operator!=(const Grid& o) const { return !(*this == o); }
};

inline double norm(const Vec& v, int d)
{
    double s = 0;
    for (int i = 0; i < d; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

inline void require_same(const Grid& a, const Grid& b)
{
    if (a != b) throw GridMismatch("grid mismatch");
}

// Q_{mu,l}: center 2^{-mu} l, side 2^{-mu}
struct DyadicCube {
    int mu = 0;
    IVec l{0, 0, 0};

    double side() const { return std::ldexp(1.0, -mu); }
    double volume(int d) const { return std::ldexp(1.0, -mu * d); }
    Vec center(int d) const
    {
        Vec c{0, 0, 0};
        for (int i = 0; i < d; ++i) c[i] = double(l[i]) * side();
        return c;
    }
    bool operator==(const DyadicCube& o) const { return mu == o.mu && l == o.l; }
};

inline void require_resolvable(const Grid& g, int mu)
{
    if (mu < 0 || (g.N >> mu) < 2 || mu > g.log2N())
        throw ResolutionError("cube level " + std::to_string(mu) + " too fine for N=" + std::to_string(g.N));
}

// lattice points per axis of a level-mu cube
inline long cube_width(const Grid& g, int mu) { return g.N >> mu; }

// half-open membership: axis range [l S - S/2, l S + S/2) mod N
inline bool cube_contains(const Grid& g, const DyadicCube& q, long p)
{
    long S = cube_width(g, q.mu);
    IVec m = g.unravel(p);
    for (int i = 0; i < g.d; ++i) {
        long lo = q.l[i] * S - S / 2;
        if (wrap(m[i] - lo, g.N) >= S) return false;
    }
    return true;
}

inline DyadicCube cube_of(const Grid& g, int mu, long p)
{
    long S = cube_width(g, mu);
    long nc = 1L << mu;
    IVec m = g.unravel(p);
    DyadicCube q;
    q.mu = mu;
    for (int i = 0; i < g.d; ++i) q.l[i] = wrap(wrap(m[i] + S / 2, g.N) / S, nc);
    return q;
}

// flat index of a cube among the 2^{mu d} cubes of its level
inline long cube_id(const DyadicCube& q, int d)
{
    long nc = 1L << q.mu, id = 0;
    for (int i = 0; i < d; ++i) id = id * nc + wrap(q.l[i], nc);
    return id;
}

inline DyadicCube cube_from_id(int mu, long id, int d)
{
    long nc = 1L << mu;
    DyadicCube q;
    q.mu = mu;
    for (int i = d - 1; i >= 0; --i) {
        q.l[i] = id % nc;
        id /= nc;
    }
    return q;
}

inline std::vector<DyadicCube> dyadic_cubes_at_level(const Grid& g, int mu)
{
    require_resolvable(g, mu);
    long count = 1L << (mu * g.d);
    std::vector<DyadicCube> out;
    out.reserve(count);
    for (long id = 0; id < count; ++id) out.push_back(cube_from_id(mu, id, g.d));
    return out;
}

// (mu,l) <= (mu',l'): mu >= mu' and Q_{mu,l} inside 2Q_{mu',l'} on the torus
inline bool subcube_order(const DyadicCube& a, const DyadicCube& b, int d)
{
    if (a.mu < b.mu) return false;
    double sa = a.side(), sb = b.side();
    if (2 * sb >= 1.0) return true;
    for (int i = 0; i < d; ++i) {
        double delta = double(a.l[i]) * sa - double(b.l[i]) * sb;
        delta -= std::floor(delta + 0.5);
        if (delta - sa / 2 < -sb || delta + sa / 2 > sb) return false;
    }
    return true;
}

// Q_a contained in Q_b (not doubled), periodic
inline bool cube_inside(const DyadicCube& a, const DyadicCube& b, int d)
{
    if (a.mu < b.mu) return false;
    if (b.mu == 0) return true;
    double sa = a.side(), sb = b.side();
    for (int i = 0; i < d; ++i) {
        double delta = double(a.l[i]) * sa - double(b.l[i]) * sb;
        delta -= std::floor(delta + 0.5);
        if (delta - sa / 2 < -sb / 2 || delta + sa / 2 > sb / 2) return false;
    }
    return true;
}

// lattice point p inside the doubled cube 2Q (periodic); whole torus once 2 side >= 1
inline bool in_doubled(const Grid& g, const DyadicCube& q, long p)
{
    if (q.mu <= 1) return true;
    long S = cube_width(g, q.mu);
    IVec m = g.unravel(p);
    for (int i = 0; i < g.d; ++i) {
        long lo = q.l[i] * S - S;
        if (wrap(m[i] - lo, g.N) >= 2 * S) return false;
    }
    return true;
}

inline double unit_ball_volume(int d)
{
    switch (d) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    default: return 4.0 * std::numbers::pi / 3.0;
    }
}

struct ConeLevel {
    int j = 1;
    std::vector<IVec> offsets; // lattice units, |t| < 2^{-j}
    double volume_ratio = 1;   // |B_j| h^d / (c_d 2^{-jd})
};

struct ConeIndex {
    Grid grid;
    int j_max = 0;
    std::vector<ConeLevel> levels; // levels[j-1]

    const ConeLevel& level(int j) const
    {
        if (j < 1 || j > j_max) throw ResolutionError("cone level out of range");
        return levels[j - 1];
    }
};

inline ConeIndex cone_index(const Grid& g, int j_max)
{
    if (j_max < 1 || (g.N >> j_max) < 2)
        throw ResolutionError("cone j_max=" + std::to_string(j_max) + " too fine for N=" + std::to_string(g.N));
    ConeIndex c;
    c.grid = g;
    c.j_max = j_max;
    long P = g.points();
    for (int j = 1; j <= j_max; ++j) {
        ConeLevel lv;
        lv.j = j;
        long R = g.N >> j; // radius in lattice units
        for (long p = 0; p < P; ++p) {
            IVec m = g.unravel(p);
            IVec u{0, 0, 0};
            long r2 = 0;
            for (int i = 0; i < g.d; ++i) {
                u[i] = signed_mod(m[i], g.N);
                r2 += u[i] * u[i];
            }
            if (r2 < R * R) lv.offsets.push_back(u);
        }
        lv.volume_ratio = double(lv.offsets.size()) * g.vol() / (unit_ball_volume(g.d) * std::ldexp(1.0, -j * g.d));
        c.levels.push_back(std::move(lv));
    }
    return c;
}

} // namespace ovtl
