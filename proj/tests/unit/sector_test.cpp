#include "astras/sector.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace astras;

TEST(SectorLayout, SixteenAlternatingSectorsTileTheCircle)
{
    const SectorLayout L;
    ASSERT_EQ(L.size(), 16);
    double edge = -180.0;
    for (int i = 0; i < L.size(); ++i) {
        EXPECT_EQ(L[i].index, i);
        EXPECT_EQ(L[i].kind, i % 2 == 0 ? SectorKind::single_shadow : SectorKind::two_shadow);
        EXPECT_DOUBLE_EQ(L[i].start_deg, edge);
        edge += L[i].span_deg;
    }
    EXPECT_DOUBLE_EQ(edge, 180.0);
}

TEST(SectorLayout, NamesFollowMirrorLetters)
{
    const SectorLayout L;
    EXPECT_EQ(L[0].name, "AA");
    EXPECT_EQ(L[1].name, "AB");
    EXPECT_EQ(L[2].name, "BB");
    EXPECT_EQ(L[14].name, "HH");
    EXPECT_EQ(L[15].name, "HA");
}

TEST(SectorLayout, TwoShadowCentersSitHalfAPeriodFromMirrorCenters)
{
    const SectorLayout L;
    for (int m = 0; m < 8; ++m) {
        EXPECT_NEAR(L[2 * m].center_deg(), L.mirror_center_deg(m), 1e-12);
        EXPECT_NEAR(angle_diff_deg(L[2 * m + 1].center_deg(), L.mirror_center_deg(m)), 22.5, 1e-12);
    }
}

TEST(SectorLayout, AdjacencyIsCyclicNeighbourhood)
{
    const SectorLayout L;
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const int d = ((i - j) % 16 + 16) % 16;
            EXPECT_EQ(L.adjacent(i, j), d == 0 || d == 1 || d == 15) << i << "," << j;
        }
    EXPECT_TRUE(L.adjacent(0, 15));
    EXPECT_FALSE(L.adjacent(3, 15));
}

TEST(SectorLayout, SectorOfRespectsHalfOpenSpans)
{
    const SectorLayout L;
    EXPECT_EQ(L.sector_of(-180.0), 0);
    EXPECT_EQ(L.sector_of(180.0), 0);
    EXPECT_EQ(L.sector_of(-145.0), 1);
    EXPECT_EQ(L.sector_of(-145.0 - 1e-9), 0);
    EXPECT_EQ(L.sector_of(179.999), 15);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-180.0, 180.0);
    for (int n = 0; n < 1000; ++n) {
        const double b = u(rng);
        const Sector& s = L[L.sector_of(b)];
        EXPECT_LE(s.start_deg, b);
        EXPECT_LT(b, s.end_deg());
    }
}

TEST(SectorLayout, RejectsSpansThatDoNotClose)
{
    EXPECT_THROW(SectorLayout(8, 40.0, 10.0), ConfigError);
    EXPECT_NO_THROW(SectorLayout(6, 50.0, 10.0));
}
