#pragma once
#include "rng.hpp"
#include "spectral.hpp"

namespace ovtl {

inline Mat random_matrix(int n, CounterRng& rng)
{
    Mat a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = rng.cnormal();
    return a;
}

inline Mat unit_matrix(int n, int r, int c)
{
    Mat a = Mat::Zero(n, n);
    a(r, c) = 1;
    return a;
}

// e^{2 pi i k.s} A
inline OperatorField single_mode(const Grid& g, const IVec& k, const Mat& A)
{
    OperatorField f(g, int(A.rows()));
    for (long p = 0; p < g.points(); ++p) {
        IVec m = g.unravel(p);
        double ph = 0;
        for (int i = 0; i < g.d; ++i) ph += double(k[i] * m[i] % g.N) / double(g.N);
        f.at(p) = std::exp(cplx(0, 2 * std::numbers::pi * ph)) * A;
    }
    return f;
}

// iid complex Gaussian coefficients on r_lo <= |xi| <= r_hi
inline OperatorField band_limited_random(const Grid& g, int n, double r_lo, double r_hi, CounterRng& rng)
{
    OperatorField fhat(g, n);
    for (long p = 0; p < g.points(); ++p) {
        double r = std::sqrt(double(g.freq_norm2(p)));
        if (r < r_lo || r > r_hi) continue;
        fhat.at(p) = random_matrix(n, rng);
    }
    return fft_inverse(fhat);
}

inline OperatorField random_field(const Grid& g, int n, CounterRng& rng)
{
    OperatorField f(g, n);
    for (auto& x : f.raw()) x = rng.cnormal();
    return f;
}

// smooth compact bump of radius `radius` around `center`, times A
inline double bump_value(double r) { return r < 1 ? std::exp(1 - 1 / (1 - r * r)) : 0.0; }

inline OperatorField bump(const Grid& g, const Vec& center, double radius, const Mat& A)
{
    OperatorField f(g, int(A.rows()));
    for (long p = 0; p < g.points(); ++p) {
        Vec s = g.coord(p);
        double r2 = 0;
        for (int i = 0; i < g.d; ++i) {
            double t = s[i] - center[i];
            t -= std::round(t);
            r2 += t * t;
        }
        f.at(p) = bump_value(std::sqrt(r2) / radius) * A;
    }
    return f;
}

// +A on the lower half of the level-mu cube q along axis 0, -A on the upper half, 0 elsewhere
inline OperatorField haar(const Grid& g, const DyadicCube& q, const Mat& A)
{
    OperatorField f(g, int(A.rows()));
    long S = cube_width(g, q.mu);
    for (long p = 0; p < g.points(); ++p) {
        if (!cube_contains(g, q, p)) continue;
        long off = wrap(g.unravel(p)[0] - (q.l[0] * S - S / 2), g.N);
        f.at(p) = (off < S / 2 ? 1.0 : -1.0) * A;
    }
    return f;
}

} // namespace ovtl
