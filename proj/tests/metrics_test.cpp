#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "evoga/metrics.hpp"

using namespace evoga;

namespace {

// N copies of each center, exactly on the mode.
Mat samples_at_centers(const MixtureSpec& spec, int per_mode) {
    Mat s(static_cast<int>(spec.centers.size()) * per_mode, 2);
    int r = 0;
    for (const auto& c : spec.centers)
        for (int k = 0; k < per_mode; ++k) {
            s(r, 0) = c[0] * spec.scale;
            s(r, 1) = c[1] * spec.scale;
            ++r;
        }
    return s;
}

}  // namespace

TEST(ModeCoverage, ExactCentersCoverEverything) {
    MixtureSpec spec = ring8();
    Mat s = samples_at_centers(spec, 100);
    CoverageReport rep = mode_coverage(s, spec);
    EXPECT_EQ(rep.modes_covered, 8);
    EXPECT_DOUBLE_EQ(rep.high_quality_fraction, 1.0);
    EXPECT_EQ(rep.sample_count, 800);
    for (int c : rep.per_mode_counts) EXPECT_EQ(c, 100);
}

TEST(ModeCoverage, CollapseOntoOneModeCoversOne) {
    MixtureSpec spec = ring8();
    Mat s(500, 2);
    for (int r = 0; r < 500; ++r) {
        s(r, 0) = spec.centers[3][0];
        s(r, 1) = spec.centers[3][1];
    }
    CoverageReport rep = mode_coverage(s, spec);
    EXPECT_EQ(rep.modes_covered, 1);
    EXPECT_EQ(rep.per_mode_counts[3], 500);
    EXPECT_DOUBLE_EQ(rep.high_quality_fraction, 1.0);
}

TEST(ModeCoverage, FarSamplesAreLowQuality) {
    MixtureSpec spec = ring8();
    Mat s(100, 2);  // all at the origin, > 3 sigma from every center
    CoverageReport rep = mode_coverage(s, spec);
    EXPECT_EQ(rep.modes_covered, 0);
    EXPECT_DOUBLE_EQ(rep.high_quality_fraction, 0.0);
}

TEST(ModeCoverage, RadiusBoundaryIsInclusive) {
    // powers of two keep the 3-sigma shell exactly representable
    MixtureSpec spec;
    spec.centers = {{0.0, 0.0}};
    spec.sigma = 0.25;
    Mat s(1, 2);
    s(0, 0) = 0.75;  // exactly on the shell
    CoverageReport rep = mode_coverage(s, spec, 3.0, 1);
    EXPECT_EQ(rep.per_mode_counts[0], 1);
    s(0, 0) = 0.75 + 1e-9;
    rep = mode_coverage(s, spec, 3.0, 1);
    EXPECT_EQ(rep.per_mode_counts[0], 0);
}

TEST(ModeCoverage, MinCountThreshold) {
    MixtureSpec spec = ring8();
    // 1600 samples: default min_count = 1600/(20*8) = 10
    Mat s(1600, 2);
    int r = 0;
    for (int k = 0; k < 8; ++k) {
        int quota = k < 4 ? 10 : 9;  // modes 4..7 fall one short
        for (int q = 0; q < quota; ++q) {
            s(r, 0) = spec.centers[k][0];
            s(r, 1) = spec.centers[k][1];
            ++r;
        }
    }
    for (; r < 1600; ++r) {
        s(r, 0) = 0;  // origin: low quality, assigned to no mode
        s(r, 1) = 0;
    }
    CoverageReport rep = mode_coverage(s, spec);
    EXPECT_EQ(rep.modes_covered, 4);
    EXPECT_DOUBLE_EQ(rep.high_quality_fraction, 76.0 / 1600.0);
}

TEST(ModeCoverage, PermutationInvariance) {
    MixtureSpec spec = grid25();
    Rng rng(11);
    Mat s = sample_mixture(spec, 2000, rng);
    CoverageReport a = mode_coverage(s, spec);

    std::vector<int> perm(2000);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Mat t(2000, 2);
    for (int r = 0; r < 2000; ++r) {
        t(r, 0) = s(perm[r], 0);
        t(r, 1) = s(perm[r], 1);
    }
    CoverageReport b = mode_coverage(t, spec);
    EXPECT_EQ(a.modes_covered, b.modes_covered);
    EXPECT_DOUBLE_EQ(a.high_quality_fraction, b.high_quality_fraction);
    EXPECT_EQ(a.per_mode_counts, b.per_mode_counts);
}

TEST(ModeCoverage, RealMixtureDrawCoversAll) {
    MixtureSpec spec = ring8();
    Rng rng(12);
    Mat s = sample_mixture(spec, 10240, rng);
    CoverageReport rep = mode_coverage(s, spec);
    EXPECT_EQ(rep.modes_covered, 8);
    EXPECT_GT(rep.high_quality_fraction, 0.95);
}

TEST(ModeCoverage, ShapeErrors) {
    MixtureSpec spec = ring8();
    EXPECT_THROW(mode_coverage(Mat(0, 2), spec), shape_error);
    EXPECT_THROW(mode_coverage(Mat(4, 3), spec), shape_error);
}

TEST(ScottBandwidth, ClosedFormAndDegenerateFallback) {
    // four points with per-axis sample sd exactly 1
    Mat s(4, 2);
    double a = std::sqrt(3.0 / 4.0);  // sd of {-a,-a,a,a} with n-1 norm = 1
    s(0, 0) = -a; s(0, 1) = -a;
    s(1, 0) = -a; s(1, 1) = a;
    s(2, 0) = a;  s(2, 1) = -a;
    s(3, 0) = a;  s(3, 1) = a;
    EXPECT_NEAR(scott_bandwidth(s), std::pow(4.0 / 12.0, 0.2), 1e-12);
    // all-identical samples: zero spread falls back to bandwidth 1
    EXPECT_DOUBLE_EQ(scott_bandwidth(Mat(10, 2, 2.5)), 1.0);
}

TEST(KdeGrid, SingleSampleMatchesGaussianFormula) {
    Mat s(1, 2);  // sample at the origin
    double h = 0.5;
    KdeGrid grid = kde_grid(s, -1, 1, -1, 1, 4, h);
    EXPECT_EQ(grid.resolution, 4);
    EXPECT_DOUBLE_EQ(grid.bandwidth, h);
    double norm = 1.0 / (2.0 * std::numbers::pi * h * h);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double cy = -1 + (i + 0.5) * 0.5;
            double cx = -1 + (j + 0.5) * 0.5;
            double expect = norm * std::exp(-(cx * cx + cy * cy) / (2 * h * h));
            ASSERT_NEAR(grid.at(i, j), expect, 1e-12);
        }
    // the four innermost cells tie for the maximum
    double best = *std::max_element(grid.density.begin(), grid.density.end());
    EXPECT_DOUBLE_EQ(grid.at(1, 1), best);
    EXPECT_DOUBLE_EQ(grid.at(2, 2), best);
}

TEST(KdeGrid, MassIntegratesToOne) {
    Rng rng(13);
    Mat s = random_normal(500, 2, rng);
    int res = 100;
    KdeGrid grid = kde_grid(s, -8, 8, -8, 8, res, 0.3);
    double cell = (16.0 / res) * (16.0 / res);
    double mass = 0;
    for (double d : grid.density) mass += d * cell;
    EXPECT_NEAR(mass, 1.0, 0.02);
}

TEST(KdeGrid, TwoClustersGiveTwoPeaks) {
    Mat s(2, 2);
    s(0, 0) = -2;
    s(1, 0) = 2;
    KdeGrid grid = kde_grid(s, -4, 4, -4, 4, 40, 0.4);
    // density at each sample location beats the midpoint
    double at_left = grid.at(19, 9);   // cell center (-2.1, -0.1) near (-2, 0)
    double at_mid = grid.at(19, 19);   // near origin
    double at_right = grid.at(19, 29);
    EXPECT_GT(at_left, at_mid);
    EXPECT_GT(at_right, at_mid);
}

TEST(KdeGrid, TranslationEquivariance) {
    Rng rng(14);
    Mat s = random_normal(64, 2, rng);
    Mat t = s;
    for (int r = 0; r < 64; ++r) {
        t(r, 0) += 3.0;
        t(r, 1) -= 1.0;
    }
    KdeGrid a = kde_grid(s, -5, 5, -5, 5, 16, 0.4);
    KdeGrid b = kde_grid(t, -2, 8, -6, 4, 16, 0.4);
    for (size_t i = 0; i < a.density.size(); ++i)
        ASSERT_NEAR(a.density[i], b.density[i], 1e-12);
}

TEST(KdeGrid, ValidationErrors) {
    EXPECT_THROW(kde_grid(Mat(4, 2), -1, 1, -1, 1, 1), shape_error);
    EXPECT_THROW(kde_grid(Mat(0, 2), -1, 1, -1, 1, 8), shape_error);
    EXPECT_THROW(kde_grid(Mat(4, 3), -1, 1, -1, 1, 8), shape_error);
}

TEST(WriteKdeGrid, HeaderedTextFormat) {
    KdeGrid grid{0, 1, 0, 2, 2, 0.5, {1.0, 2.0, 3.0, 4.5}};
    std::ostringstream os;
    write_kde_grid(os, grid);
    EXPECT_EQ(os.str(), "0 1 0 2\n2\n1 2\n3 4.5\n");
}
