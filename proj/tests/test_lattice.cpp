#include <gtest/gtest.h>

#include <set>

#include "ovtl/lattice.hpp"
#include "ovtl/rng.hpp"

using namespace ovtl;

TEST(Grid, RejectsBadSizes)
{
    EXPECT_THROW(Grid(1, 8), DomainError);
    EXPECT_THROW(Grid(1, 48), DomainError);
    EXPECT_THROW(Grid(4, 16), DomainError);
    EXPECT_NO_THROW(Grid(3, 16));
}

TEST(Grid, RavelRoundTrip)
{
    Grid g(3, 16);
    for (long p = 0; p < g.points(); p += 37) EXPECT_EQ(g.ravel(g.unravel(p)), p);
}

TEST(DyadicCubes, WholeTorusAtLevelZero)
{
    Grid g(1, 16);
    auto cs = dyadic_cubes_at_level(g, 0);
    ASSERT_EQ(cs.size(), 1u);
    for (long p = 0; p < 16; ++p) EXPECT_TRUE(cube_contains(g, cs[0], p));
}

TEST(DyadicCubes, FourCubesOfSideHalf)
{
    Grid g(2, 32);
    auto cs = dyadic_cubes_at_level(g, 1);
    ASSERT_EQ(cs.size(), 4u);
    for (auto& q : cs) {
        long count = 0;
        for (long p = 0; p < g.points(); ++p) count += cube_contains(g, q, p);
        EXPECT_EQ(count, 256);
    }
}

TEST(DyadicCubes, TooFineLevelThrows)
{
    Grid g(1, 16);
    EXPECT_THROW(dyadic_cubes_at_level(g, 4), ResolutionError);
    EXPECT_NO_THROW(dyadic_cubes_at_level(g, 3));
}

TEST(DyadicCubes, TilingCoversEveryPointOnce)
{
    for (int d = 1; d <= 3; ++d) {
        Grid g(d, d == 3 ? 16 : 32);
        for (int mu = 0; (g.N >> mu) >= 2; ++mu) {
            auto cs = dyadic_cubes_at_level(g, mu);
            std::vector<int> hits(g.points(), 0);
            for (auto& q : cs)
                for (long p = 0; p < g.points(); ++p) hits[p] += cube_contains(g, q, p);
            for (long p = 0; p < g.points(); ++p) ASSERT_EQ(hits[p], 1) << "d=" << d << " mu=" << mu;
            for (long p = 0; p < g.points(); ++p) ASSERT_TRUE(cube_contains(g, cube_of(g, mu, p), p));
        }
    }
}

// exact interval test in units of 2^{-12}
static bool order_oracle(const DyadicCube& a, const DyadicCube& b, int d)
{
    if (a.mu < b.mu) return false;
    const long U = 1L << 12;
    long sa = U >> a.mu, sb = U >> b.mu;
    for (int i = 0; i < d; ++i) {
        long lo_b = b.l[i] * sb - sb, len_b = 2 * sb;
        if (len_b >= U) continue;
        long lo_a = a.l[i] * sa - sa / 2;
        for (long x = lo_a; x < lo_a + sa; ++x)
            if (wrap(x - lo_b, U) >= len_b) return false;
    }
    return true;
}

TEST(SubcubeOrder, Examples)
{
    DyadicCube a{1, {0, 0, 0}}, b{0, {0, 0, 0}};
    EXPECT_TRUE(subcube_order(a, b, 1));
    EXPECT_FALSE(subcube_order(b, a, 1));
    DyadicCube c{2, {3, 0, 0}}, e{1, {1, 0, 0}};
    EXPECT_EQ(subcube_order(c, e, 1), order_oracle(c, e, 1));
    EXPECT_TRUE(subcube_order(c, e, 1));
}

TEST(SubcubeOrder, MatchesIntervalOracle)
{
    CounterRng rng(7);
    for (int t = 0; t < 2000; ++t) {
        int d = 1 + int(rng.next() % 2);
        DyadicCube a, b;
        a.mu = int(rng.next() % 6);
        b.mu = int(rng.next() % 6);
        for (int i = 0; i < d; ++i) {
            a.l[i] = long(rng.next() % (1UL << a.mu));
            b.l[i] = long(rng.next() % (1UL << b.mu));
        }
        ASSERT_EQ(subcube_order(a, b, d), order_oracle(a, b, d));
    }
}

TEST(SubcubeOrder, ReflexiveAndTransitive)
{
    CounterRng rng(11);
    auto draw = [&](int mu) {
        DyadicCube q;
        q.mu = mu;
        q.l[0] = long(rng.next() % (1UL << mu));
        return q;
    };
    for (int mu = 0; mu < 6; ++mu) {
        DyadicCube q = draw(mu);
        EXPECT_TRUE(subcube_order(q, q, 1));
    }
    int checked = 0;
    for (int t = 0; t < 20000 && checked < 200; ++t) {
        DyadicCube a = draw(3 + int(rng.next() % 3)), b = draw(1 + int(rng.next() % 3)), c = draw(int(rng.next() % 2));
        if (subcube_order(a, b, 1) && subcube_order(b, c, 1)) {
            ++checked;
            EXPECT_TRUE(subcube_order(a, c, 1));
        }
    }
    EXPECT_GT(checked, 0);
}

TEST(ConeIndex, BallCounts)
{
    Grid g(1, 64);
    ConeIndex c = cone_index(g, 3);
    EXPECT_EQ(c.level(3).offsets.size(), 15u);
    EXPECT_EQ(c.level(1).offsets.size(), 63u);
    EXPECT_THROW(cone_index(g, 6), ResolutionError);
    EXPECT_NO_THROW(cone_index(g, 5));
}

TEST(ConeIndex, BallsAreNestedAndStrict)
{
    Grid g(2, 32);
    ConeIndex c = cone_index(g, 4);
    for (int j = 1; j <= 4; ++j) {
        auto& lv = c.level(j);
        EXPECT_FALSE(lv.offsets.empty());
        std::set<IVec> outer(lv.offsets.begin(), lv.offsets.end());
        for (auto& u : lv.offsets) {
            double r = std::hypot(double(u[0]), double(u[1])) * g.h();
            EXPECT_LT(r, std::ldexp(1.0, -j));
        }
        if (j < 4)
            for (auto& u : c.level(j + 1).offsets) EXPECT_TRUE(outer.count(u));
        EXPECT_GT(lv.volume_ratio, 0.5);
        EXPECT_LT(lv.volume_ratio, 1.5);
    }
}
