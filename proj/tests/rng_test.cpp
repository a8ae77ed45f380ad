#include <gtest/gtest.h>

#include <cstdint>
#include <set>
#include <vector>

#include "deskpilot/rng.hpp"

using deskpilot::Rng;

TEST(Rng, SameSeedSameSequence) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, DifferentSeedsDiverge) {
    Rng a(1), b(2);
    int equal = 0;
    for (int i = 0; i < 100; ++i)
        if (a.next_u64() == b.next_u64()) ++equal;
    EXPECT_LT(equal, 3);
}

TEST(Rng, UniformInUnitInterval) {
    Rng r(7);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(Rng, UniformRangeRespectsBounds) {
    Rng r(9);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform(-2.5, 3.5);
        EXPECT_GE(u, -2.5);
        EXPECT_LT(u, 3.5);
    }
}

TEST(Rng, UniformIntInclusiveBothEnds) {
    Rng r(11);
    std::set<int> seen;
    for (int i = 0; i < 10000; ++i) {
        const int v = r.uniform_int(-3, 3);
        EXPECT_GE(v, -3);
        EXPECT_LE(v, 3);
        seen.insert(v);
    }
    EXPECT_EQ(seen.size(), 7u);  // all values reachable, ends included
}

TEST(Rng, BernoulliRateRoughlyMatches) {
    Rng r(13);
    int hits = 0;
    for (int i = 0; i < 100000; ++i)
        if (r.bernoulli(0.3)) ++hits;
    EXPECT_NEAR(hits / 100000.0, 0.3, 0.01);
}

TEST(Rng, DeriveIsStatelessAndReproducible) {
    Rng a = Rng::derive(99, 5);
    Rng b = Rng::derive(99, 5);
    EXPECT_EQ(a.next_u64(), b.next_u64());
    Rng c = Rng::derive(99, 6);
    Rng d = Rng::derive(100, 5);
    Rng e = Rng::derive(99, 5);
    const auto v = e.next_u64();
    EXPECT_NE(c.next_u64(), v);
    EXPECT_NE(d.next_u64(), v);
}

TEST(Rng, ForkChangesParentButIsReproducible) {
    Rng a(21), b(21);
    Rng fa = a.fork(3);
    Rng fb = b.fork(3);
    EXPECT_EQ(fa.next_u64(), fb.next_u64());
    EXPECT_EQ(a.next_u64(), b.next_u64());  // parents stay in lockstep
}
