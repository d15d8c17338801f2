#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <ucvol/measurements.hpp>

#include <random>

using namespace ucvol;

namespace {

std::vector<PointPair> pairs_of(const std::string& s) {
    const auto d = ACRDescriptor::parse(s);
    return {d.pairs().begin(), d.pairs().end()};
}

// Every member of the listed basins at levels 1..5 gets the same value.
AcrVolumes uniform_volumes(std::span<const Basin> basins, double value) {
    AcrVolumes v;
    for (const auto& b : basins)
        for (const auto& m : b.members)
            if (!m.empty()) v[m] = value;
    return v;
}

ConstraintSystem contact_band() {
    ConstraintSystem sys;
    sys.activeLower = {1.0, 0.0};
    sys.activeUpper = {1.0, 0.3};
    sys.collision = {1.0, 0.0};
    return sys;
}

Pose pose_at(const GridSpec& g, const std::array<double, 6>& u) {
    Pose p;
    for (std::size_t a = 0; a < 6; ++a) p.v[a] = g.origin(a) + u[a] * g.step(a);
    return p;
}

}  // namespace

TEST(WeightedVolume, Examples) {
    const std::array<double, 5> ones{1, 1, 1, 1, 1};
    EXPECT_DOUBLE_EQ(weighted_basin_volume(ones, 1.0), 5.0);
    const std::array<double, 5> top{0, 0, 0, 0, 1};
    EXPECT_DOUBLE_EQ(weighted_basin_volume(top, 2.0), 1.0);
    const std::array<double, 5> bottom{1, 0, 0, 0, 0};
    EXPECT_DOUBLE_EQ(weighted_basin_volume(bottom, 2.0), 16.0);

    const std::array<double, 5> v{10, 20, 30, 20, 10};
    const double b = 1.068;
    const double expected = 10 * b * b * b * b + 20 * b * b * b + 30 * b * b + 20 * b + 10;
    EXPECT_NEAR(weighted_basin_volume(v, b), expected, 1e-12);

    const std::array<double, 5> negative{1, -1, 0, 0, 0};
    EXPECT_THROW((void)weighted_basin_volume(negative, 1.0), Error);
    EXPECT_THROW((void)weighted_basin_volume(std::span(v.data(), 4), 1.0), Error);
}

TEST(WeightedVolume, BasinLevelsSumMembers) {
    const auto basin = basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1"));
    const std::vector<Basin> one{basin};
    const auto vols = uniform_volumes(one, 1.0);
    // members per level: C(6,5), C(6,4), C(6,3), C(6,2), C(6,1)
    const std::array<double, 5> expected{6, 15, 20, 15, 6};
    EXPECT_EQ(basin_level_volumes(basin, vols), expected);
    EXPECT_DOUBLE_EQ(basin_volume(basin, vols, 1.0), 62.0);
}

TEST(RelativeVolume, DisjointBasinsAgreeUnderBothDenominators) {
    const std::vector<Basin> basins{basin_from_bottom(pairs_of("1-1;1-2;1-3;1-4;2-1;2-2")),
                                    basin_from_bottom(pairs_of("3-1;3-2;3-3;3-4;4-1;4-2"))};
    AcrVolumes vols = uniform_volumes(std::span(basins.data(), 1), 1.0);
    for (const auto& m : basins[1].members)
        if (!m.empty()) vols[m] = 3.0;
    const std::vector<double> v{basin_volume(basins[0], vols, 1.0), basin_volume(basins[1], vols, 1.0)};
    EXPECT_DOUBLE_EQ(v[0], 62.0);
    EXPECT_DOUBLE_EQ(v[1], 186.0);
    const double u = union_volume(basins, vols, 1.0);
    EXPECT_DOUBLE_EQ(u, 248.0);
    const auto bySum = relative_volumes(v, RelativeMode::Sum);
    const auto byUnion = relative_volumes(v, RelativeMode::Union, u);
    EXPECT_DOUBLE_EQ(bySum[0], 0.25);
    EXPECT_DOUBLE_EQ(bySum[1], 0.75);
    EXPECT_EQ(bySum, byUnion);
}

TEST(RelativeVolume, IdenticalBasins) {
    const auto b = basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1"));
    const std::vector<Basin> basins{b, b};
    const auto vols = uniform_volumes(basins, 0.5);
    const std::vector<double> v{basin_volume(b, vols, 1.068), basin_volume(b, vols, 1.068)};
    const double u = union_volume(basins, vols, 1.068);
    EXPECT_DOUBLE_EQ(u, v[0]);
    const auto bySum = relative_volumes(v, RelativeMode::Sum);
    const auto byUnion = relative_volumes(v, RelativeMode::Union, u);
    EXPECT_DOUBLE_EQ(bySum[0], 0.5);
    EXPECT_DOUBLE_EQ(byUnion[0], 1.0);
    EXPECT_DOUBLE_EQ(byUnion[1], 1.0);
}

TEST(RelativeVolume, OverlapCountsSharedRegionsOnce) {
    // five shared pairs: 31 shared members at levels 1..5, each basin has 62
    const std::vector<Basin> basins{basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1")),
                                    basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;1-3"))};
    const auto vols = uniform_volumes(basins, 1.0);
    const double u = union_volume(basins, vols, 1.0);
    EXPECT_DOUBLE_EQ(u, 62.0 + 62.0 - 31.0);
    const std::vector<double> v{basin_volume(basins[0], vols, 1.0), basin_volume(basins[1], vols, 1.0)};
    const auto byUnion = relative_volumes(v, RelativeMode::Union, u);
    EXPECT_DOUBLE_EQ(byUnion[0], 62.0 / 93.0);
    const auto bySum = relative_volumes(v, RelativeMode::Sum);
    EXPECT_DOUBLE_EQ(bySum[0], 0.5);
}

TEST(RelativeVolume, ZeroTotalIsAnError) {
    const std::vector<double> zero{0.0, 0.0};
    try {
        (void)relative_volumes(zero, RelativeMode::Sum);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ZeroDenominator);
    }
    EXPECT_THROW((void)relative_volumes(zero, RelativeMode::Union, 0.0), Error);
}

TEST(Shape, FlatLevelsGiveTwentyPercent) {
    const auto basin = basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1"));
    const std::array<double, 5> perLevel{6, 15, 20, 15, 6};
    AcrVolumes samples;
    for (const auto& m : basin.members)
        if (!m.empty()) samples[m] = 1.0 / perLevel[static_cast<std::size_t>(m.level() - 1)];
    const std::vector<Basin> all{basin};
    const auto d = shape_distribution(samples, basin, all, {});
    for (const auto& l : d.levels) {
        EXPECT_TRUE(l.defined);
        EXPECT_NEAR(l.fraction, 0.2, 1e-12) << l.level;
    }
    EXPECT_TRUE(d.undefinedLevels.empty());
}

TEST(Shape, SingleLevelTakesEverything) {
    const auto basin = basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1"));
    AcrVolumes samples;
    for (std::size_t m : basin.at_level(3)) samples[basin.members[m]] = 7.0;
    const std::vector<Basin> all{basin};
    for (int variant = 1; variant <= 4; ++variant) {
        ShapeOptions o;
        o.variant = variant;
        o.factor = 1.068;
        const auto d = shape_distribution(samples, basin, all, o);
        EXPECT_DOUBLE_EQ(d.levels[2].fraction, 1.0) << variant;
        if (variant == 1) {
            EXPECT_EQ(d.levels[0].fraction, 0.0);
        } else {
            // other levels have no samples anywhere, so their denominators vanish
            EXPECT_EQ(d.undefinedLevels, (std::vector<int>{1, 2, 4, 5})) << variant;
        }
    }
}

TEST(Shape, VariantFourComparesBasinsAgainstTheAverage) {
    const std::vector<Basin> basins{basin_from_bottom(pairs_of("1-1;1-2;1-3;1-4;2-1;2-2")),
                                    basin_from_bottom(pairs_of("3-1;3-2;3-3;3-4;4-1;4-2"))};
    AcrVolumes samples = uniform_volumes(std::span(basins.data(), 1), 2.0);
    for (const auto& m : basins[1].members)
        if (!m.empty()) samples[m] = 1.0;
    ShapeOptions o;
    o.variant = 4;
    const auto d0 = shape_distribution(samples, basins[0], basins, o);
    const auto d1 = shape_distribution(samples, basins[1], basins, o);
    for (std::size_t i = 0; i < 5; ++i) {
        // per level: own / (all / 2) = 2c / 1.5c and c / 1.5c
        EXPECT_NEAR(d0.levels[i].value, 4.0 / 3.0, 1e-12);
        EXPECT_NEAR(d1.levels[i].value, 2.0 / 3.0, 1e-12);
    }
    o.variant = 1;
    const auto v1 = shape_distribution(samples, basins[0], basins, o);
    EXPECT_NE(v1.levels[0].value, d0.levels[0].value);
}

TEST(Shape, NoSamplesAnywhereIsUndefined) {
    const auto basin = basin_from_bottom(pairs_of("1-1;1-2;2-2;2-3;3-3;3-1"));
    const std::vector<Basin> all{basin};
    try {
        (void)shape_distribution({}, basin, all, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UndefinedLevel);
    }
    ShapeOptions bad;
    bad.variant = 5;
    EXPECT_THROW((void)shape_distribution({}, basin, all, bad), Error);
}

TEST(Gamma, SixthRootOfDensityRatio) {
    EXPECT_DOUBLE_EQ(gamma(500.0, 500.0), 1.0);
    EXPECT_NEAR(gamma(4096.0, 64.0), 2.0, 1e-14);
    EXPECT_NEAR(gamma(729.0, 1.0), 3.0, 1e-14);
    EXPECT_THROW((void)gamma(0.0, 1.0), Error);
    EXPECT_THROW((void)gamma(10.0, 0.0), Error);
}

class Coverage : public ::testing::Test {
protected:
    GridSpec fine{{0.5, 0.5, 0.5}, {8, 8, 8}, {0.1, 0.2, 0.3, 0.05, 0.1, 0.15}};
    std::vector<CubeKey> baseline;

    void SetUp() override {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> t(-6, 6), r(0, 7);
        std::set<CubeKey> keys;
        while (keys.size() < 200) keys.insert({t(rng), t(rng), t(rng), r(rng), r(rng), r(rng)});
        baseline.assign(keys.begin(), keys.end());
    }

    std::vector<Pose> at_points(std::array<double, 6> shift = {}) const {
        std::vector<Pose> out;
        for (const auto& k : baseline) {
            std::array<double, 6> u{};
            for (std::size_t a = 0; a < 6; ++a) u[a] = k[a] + shift[a];
            out.push_back(pose_at(fine, u));
        }
        return out;
    }

    // Direct check of every sample against every point, wrap-aware on rotation axes.
    std::size_t brute_missed(std::span<const Pose> samples, double g) const {
        std::size_t missed = 0;
        for (const auto& k : baseline) {
            bool hit = false;
            for (const auto& s : samples) {
                bool in = true;
                for (std::size_t a = 0; a < 6 && in; ++a) {
                    double d = std::abs((s.v[a] - fine.origin(a)) / fine.step(a) - k[a]);
                    if (fine.period(a)) {
                        d = std::fmod(d, fine.period(a));
                        d = std::min(d, fine.period(a) - d);
                    }
                    in = d <= g + 1e-9;
                }
                if (in) {
                    hit = true;
                    break;
                }
            }
            missed += !hit;
        }
        return missed;
    }
};

TEST_F(Coverage, SamplesOnEveryPointMissNothing) {
    const auto r = coverage_error(baseline, fine, at_points(), 1.0);
    EXPECT_EQ(r.baselinePoints, 200u);
    EXPECT_EQ(r.missed, 0u);
    EXPECT_EQ(r.missed_ratio(), 0.0);
}

TEST_F(Coverage, NoSamplesMissEverything) {
    const auto r = coverage_error(baseline, fine, {}, 1.0);
    EXPECT_EQ(r.missed_ratio(), 1.0);
}

TEST_F(Coverage, OffsetBeyondGammaMisses) {
    const double g = 0.4;
    std::array<double, 6> shift{};
    shift[0] = 1.5 * g;
    const auto far = at_points(shift);
    EXPECT_EQ(coverage_error(baseline, fine, far, g).missed, brute_missed(far, g));
    shift[0] = 0.5 * g;
    shift[4] = -0.5 * g;
    EXPECT_EQ(coverage_error(baseline, fine, at_points(shift), g).missed, 0u);
}

TEST_F(Coverage, RotationOffsetWrapsAroundThePeriod) {
    std::array<double, 6> shift{};
    shift[3] = 8.0 - 0.3;  // a full turn minus 0.3 steps
    EXPECT_EQ(coverage_error(baseline, fine, at_points(shift), 0.5).missed, 0u);
}

TEST_F(Coverage, RandomSamplesMatchBruteForceAndShrinkWithGamma) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> t(-6.5, 6.5), r(0.0, 8.0);
    std::vector<Pose> samples;
    for (int i = 0; i < 300; ++i) samples.push_back(pose_at(fine, {t(rng), t(rng), t(rng), r(rng), r(rng), r(rng)}));
    std::size_t previous = baseline.size() + 1;
    for (double g : {0.5, 1.0, 1.5, 2.0, 3.0}) {
        const auto rep = coverage_error(baseline, fine, samples, g);
        EXPECT_EQ(rep.missed, brute_missed(samples, g)) << g;
        EXPECT_LE(rep.missed, previous);
        previous = rep.missed;
    }
    EXPECT_THROW((void)coverage_error(baseline, fine, samples, 0.0), Error);
}

TEST_F(Coverage, HistogramOfOneSamplePerPoint) {
    // unit tiles each hold exactly one lattice point
    const auto h = coverage_histogram(baseline, fine, at_points({0.25, 0.25, 0.25, 0.25, 0.25, 0.25}), 1.0);
    EXPECT_EQ(h.cubes, baseline.size());
    ASSERT_EQ(h.counts.size(), 2u);
    EXPECT_EQ(h.counts[0], 0u);
    EXPECT_DOUBLE_EQ(h.fraction(1), 1.0);
}

TEST_F(Coverage, HistogramOfClusteredSamples) {
    std::vector<Pose> cluster(10, at_points()[0]);
    const auto h = coverage_histogram(baseline, fine, cluster, 1.0);
    ASSERT_EQ(h.counts.size(), 11u);
    EXPECT_EQ(h.counts[10], 1u);
    EXPECT_EQ(h.counts[0], baseline.size() - 1);
    EXPECT_NEAR(h.fraction(0), 199.0 / 200.0, 1e-15);
}

TEST(Efficiency, RatesAndFlags) {
    ACRSampleResult empty;
    empty.acr = ACRDescriptor::parse("1-1;2-2");
    empty.seconds = 1.0;
    EXPECT_TRUE(efficiency_row(empty).flagged);

    ACRSampleResult r;
    r.acr = empty.acr;
    r.samples.resize(100);
    r.seconds = 0.5;
    r.counters.peakFrontier = 25;
    const auto row = efficiency_row(r);
    EXPECT_FALSE(row.flagged);
    EXPECT_DOUBLE_EQ(row.samplesPerMs, 0.2);
    EXPECT_DOUBLE_EQ(row.frontierRatio, 0.25);
    EXPECT_EQ(row.acr, "1-1;2-2");

    r.seconds = 0.0;  // untimed
    EXPECT_TRUE(efficiency_row(r).flagged);
    const std::vector<ACRSampleResult> both{empty, r};
    EXPECT_EQ(efficiency_report(both).size(), 2u);
}

TEST(NestedGrid, CellCentredRefinement) {
    const GridSpec coarse(2.0, std::numbers::pi / 9, {0.013, 0.029, 0.007, 0.011, 0.017, 0.023});
    const auto fine = nested_grid(coarse, {4, 4, 4, 2, 2, 2});
    EXPECT_DOUBLE_EQ(fine.step(0), 0.5);
    EXPECT_DOUBLE_EQ(fine.origin(0), 0.013 + 0.25);
    EXPECT_EQ(fine.period(3), 36);
    EXPECT_NEAR(fine.step(3), std::numbers::pi / 18, 1e-15);
    EXPECT_NEAR(fine.origin(5), 0.023 + std::numbers::pi / 36, 1e-15);
    EXPECT_THROW((void)nested_grid(coarse, {0, 1, 1, 1, 1, 1}), Error);
}

TEST(DeriveCubes, NestedPointsFallInTheirPoseCube) {
    const GridSpec coarse(2.0, std::numbers::pi / 9, {0.013, 0.029, 0.007, 0.011, 0.017, 0.023});
    const auto fine = nested_grid(coarse, {4, 4, 4, 2, 2, 2});
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<int> t(-20, 20), r(0, 35);
    BaselineGrid g;
    g.grid = fine;
    for (int i = 0; i < 500; ++i) {
        const CubeKey k{t(rng), t(rng), t(rng), r(rng), r(rng), r(rng)};
        const auto cubes = derive_cubes(std::span(&k, 1), fine, coarse);
        ASSERT_EQ(cubes.size(), 1u);
        EXPECT_EQ(*cubes.begin(), cube_of(g.pose_of(k), coarse));
    }
}

TEST(DeriveCubes, SharedOriginPutsFacePointsInEveryAdjacentCube) {
    const GridSpec coarse({2.0, 2.0, 2.0}, {4, 4, 4});
    const GridSpec fine({0.5, 0.5, 0.5}, {16, 16, 16});
    const CubeKey corner{4, 0, -4, 0, 4, 8};  // on a coarse face along every axis
    EXPECT_EQ(derive_cubes(std::span(&corner, 1), fine, coarse).size(), 64u);
    const CubeKey inside{1, 1, 1, 1, 1, 1};
    const auto one = derive_cubes(std::span(&inside, 1), fine, coarse);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(*one.begin(), (CubeKey{0, 0, 0, 0, 0, 0}));
    const CubeKey edge{0, 2, 2, 2, 2, 2};  // on the face between translation cubes -1 and 0
    const auto two = derive_cubes(std::span(&edge, 1), fine, coarse);
    EXPECT_EQ(two.size(), 2u);
    EXPECT_TRUE(two.count({-1, 0, 0, 0, 0, 0}));
    EXPECT_THROW((void)derive_cubes({}, GridSpec({0.7, 0.5, 0.5}, {16, 16, 16}), coarse), Error);
}

TEST(Jaccard, Examples) {
    const std::set<int> a{1, 2, 3}, b{2, 3, 4}, none;
    EXPECT_DOUBLE_EQ(jaccard(a, b), 0.5);
    EXPECT_DOUBLE_EQ(jaccard(a, a), 1.0);
    EXPECT_DOUBLE_EQ(jaccard(none, none), 1.0);
}

class Baseline : public ::testing::Test {
protected:
    std::shared_ptr<const PointSet> A = fixtures::tri_a(0.5), B = fixtures::tri_b(0.5);
    ConstraintSystem sys = contact_band();
    GridSpec fine{{0.25, 0.25, 0.25}, {4, 4, 4}, {0.01, 0.02, 0.03, 0.1, 0.2, 0.3}};

    // Every lattice point in a box around A, classified one by one.
    std::map<ACRDescriptor, std::vector<CubeKey>> brute() const {
        const PoseClassifier cls(A, B, sys);
        const BoundTable& bounds = cls.bounds();
        std::map<ACRDescriptor, std::vector<CubeKey>> out;
        std::vector<PairDistance> scratch;
        CubeKey k{};
        for (k[3] = 0; k[3] < 4; ++k[3])
            for (k[4] = 0; k[4] < 4; ++k[4])
                for (k[5] = 0; k[5] < 4; ++k[5])
                    for (k[0] = -16; k[0] <= 16; ++k[0])
                        for (k[1] = -16; k[1] <= 16; ++k[1])
                            for (k[2] = -16; k[2] <= 16; ++k[2]) {
                                BaselineGrid g;
                                g.grid = fine;
                                const Pose p = g.pose_of(k);
                                const auto c = cls.classify(p.rotation(), p.translation(), InnerRule::Active, scratch);
                                if (c.rejection != Rejection::None) continue;
                                bool inside = true;
                                for (const auto& pd : scratch)
                                    if (c.acr.contains(pd.pair))
                                        inside = inside && pd.distance >= bounds.lower(pd.i, pd.j) &&
                                                 pd.distance <= bounds.upper(pd.i, pd.j);
                                if (inside) out[c.acr].push_back(k);
                            }
        for (auto& [acr, keys] : out) std::sort(keys.begin(), keys.end());
        return out;
    }
};

TEST_F(Baseline, MatchesPointByPointClassification) {
    const auto g = baseline_enumerate(A, B, sys, std::nullopt, fine);
    const auto expected = brute();
    ASSERT_FALSE(expected.empty());
    EXPECT_EQ(g.points, expected);
    EXPECT_GE(g.scanned, g.size());
}

TEST_F(Baseline, FilterKeepsOneRegion) {
    const auto all = baseline_enumerate(A, B, sys, std::nullopt, fine);
    const auto acr = ACRDescriptor::parse("1-1");
    const auto one = baseline_enumerate(A, B, sys, acr, fine);
    ASSERT_EQ(one.points.size(), 1u);
    EXPECT_EQ(one.points.at(acr), all.points.at(acr));
    EXPECT_TRUE(baseline_enumerate(A, B, sys, ACRDescriptor{}, fine).points.empty());
}

TEST_F(Baseline, ContainingMembershipIsASuperset) {
    const auto acr = ACRDescriptor::parse("1-1");
    const auto exact = baseline_enumerate(A, B, sys, acr, fine);
    const auto containing = baseline_enumerate(A, B, sys, acr, fine, 0, BaselineMembership::Containing);
    const auto& e = exact.points.at(acr);
    const auto& c = containing.points.at(acr);
    EXPECT_TRUE(std::includes(c.begin(), c.end(), e.begin(), e.end()));
    EXPECT_GT(c.size(), e.size());
}

TEST_F(Baseline, BudgetCapRefusesLargeScans) {
    try {
        (void)baseline_enumerate(A, B, sys, std::nullopt, fine, 100);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BudgetExceeded);
    }
}
