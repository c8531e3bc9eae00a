#include "astras/simkit.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace astras;

namespace {

std::vector<double> combined(const IntensityVectors& iv) { return combined_intensity(iv).values; }

std::vector<double> combined(const CompactIntensity& iv) { return combined_intensity(iv).values; }

// Full images are rendered pixel by pixel; a short sensor keeps that cheap.
EncoderGeometry short_sensor()
{
    EncoderGeometry g;
    g.sensor_height_px = 64;
    return g;
}

} // namespace

TEST(Geometry, DefaultSensitivityIsAboutTwelvePixelsPerDegree)
{
    const EncoderGeometry g;
    EXPECT_NEAR(g.sensitivity_px_per_rad(), 687.5, 1e-9);
    EXPECT_NEAR(g.sensitivity_px_per_rad() / kDegPerRad, 12.0, 0.05);
    EXPECT_NO_THROW(g.validate());
}

TEST(Geometry, InvalidConfigurationsAreRejected)
{
    EncoderGeometry g;
    g.single_sector_span_deg = 40.0;
    EXPECT_THROW(g.validate(), ConfigError);
    g = EncoderGeometry{};
    g.slit_centers_mm.pop_back();
    EXPECT_THROW(g.validate(), ConfigError);
    g = EncoderGeometry{};
    g.sensor_width_px = 1500;
    EXPECT_THROW(g.validate(), ConfigError);
    g = EncoderGeometry{};
    g.mirror_hues_deg = {0, 90};
    EXPECT_THROW(g.validate(), ConfigError);
    ImperfectionConfig imp;
    imp.backlash_arcsec = -1.0;
    EXPECT_THROW(imp.validate(), ConfigError);
}

TEST(Color, HsiRoundTripsThroughHue)
{
    for (double h = 0.0; h < 360.0; h += 7.5) {
        const auto rgb = hsi_to_rgb(h, 0.5, 0.25);
        EXPECT_NEAR((rgb[0] + rgb[1] + rgb[2]) / 3.0, 0.25, 1e-12);
        // acos loses half the digits next to 0 and 180 degrees
        EXPECT_NEAR(*rgb_to_hue(rgb[0], rgb[1], rgb[2]), h, 1e-6) << h;
    }
}

TEST(Render, SectorCentreWithoutImperfectionsEqualsStoredReference)
{
    const EncoderGeometry g = short_sensor();
    const Simulator ideal(g, ImperfectionConfig::ideal());
    const int bb = 2;
    const auto img = ideal.render_image(ideal.layout()[bb].center_deg(), Direction::clockwise, 99);
    const auto got = intensity_vectors(img);
    const auto ref = ideal.reference_intensity(bb);
    ASSERT_EQ(got.size(), ref.size());
    // the image stores floats
    for (std::size_t k = 0; k < got.size(); ++k) {
        EXPECT_NEAR(got.red[k], ref.red[k], 1e-4);
        EXPECT_NEAR(got.green[k], ref.green[k], 1e-4);
        EXPECT_NEAR(got.blue[k], ref.blue[k], 1e-4);
    }
    const Simulator noisy(g, ImperfectionConfig{});
    EXPECT_EQ(noisy.reference_intensity(bb), ideal.reference_intensity(bb));
}

TEST(Render, TwelvePointFourDegreesShiftsAboutOneHundredFiftyPixels)
{
    const Simulator sim(short_sensor(), ImperfectionConfig::ideal());
    const double beta = sim.layout()[2].center_deg() + 12.4;
    const auto in = combined(intensity_vectors(sim.render_image(beta, Direction::clockwise, 1)));
    const auto ref = combined(sim.reference_intensity(2));
    const int t = oracle::ssd_integer_shift(in, ref, 400);
    EXPECT_GE(t, 145);
    EXPECT_LE(t, 155);
}

TEST(Render, DeterministicForFixedSeed)
{
    const Simulator sim(short_sensor(), ImperfectionConfig{});
    const auto a = sim.render_image(33.3, Direction::counter_clockwise, 7);
    const auto b = sim.render_image(33.3, Direction::counter_clockwise, 7);
    EXPECT_EQ(a, b);
    const auto c = sim.render_image(33.3, Direction::counter_clockwise, 8);
    EXPECT_NE(a, c);
}

TEST(Render, BruteForceRegistrationMatchesShiftLaw)
{
    const Simulator sim(short_sensor(), ImperfectionConfig{});
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(-178.0, 178.0);
    for (int n = 0; n < 100; ++n) {
        const double beta = u(rng);
        const Direction dir = n % 2 ? Direction::clockwise : Direction::counter_clockwise;
        const int s = sim.layout().sector_of(beta);
        const auto in = combined(intensity_vectors(sim.render_image(beta, dir, 1000 + n)));
        const auto ref = combined(sim.reference_intensity(s));
        const double expect = sim.shift_px(beta, dir);
        const int t = oracle::ssd_integer_shift(in, ref, 420);
        EXPECT_LE(std::abs(t - expect), 1.0) << "beta=" << beta;
    }
}

TEST(Render, IdealSamplesObeyInverseShiftLawSubPixel)
{
    const EncoderGeometry g;
    const auto ds = generate_dataset(60, g, ImperfectionConfig::ideal(), Schedule{.step_deg = 6.0}, 3);
    const Simulator sim(g, ImperfectionConfig::ideal());
    for (const auto& s : ds.samples) {
        const auto in = combined(s.intensity);
        const auto ref = combined(sim.reference_intensity(s.true_sector));
        const double recovered = oracle::ssd_subpixel_shift(in, ref, 420);
        const double beta_s = sim.layout()[s.true_sector].center_deg();
        const double expect = sim.sensitivity() * std::tan(deg_to_rad(angle_diff_deg(s.beta_ref_deg, beta_s)));
        EXPECT_NEAR(recovered, expect, 0.02) << "beta=" << s.beta_ref_deg;
    }
}

TEST(Render, ShiftBeyondSensorIsARangeError)
{
    EncoderGeometry g;
    g.optical_gain = 5.0;
    const Simulator sim(g, ImperfectionConfig::ideal());
    const double beta = sim.layout()[4].center_deg() + 17.0;
    try {
        (void)sim.render_image(beta, Direction::clockwise, 0);
        FAIL() << "expected RangeError";
    } catch (const RangeError& e) {
        EXPECT_NEAR(e.beta_deg(), beta, 1e-12);
    }
}

TEST(Imperfections, EccentricityResidualPeakToPeak)
{
    for (double e : {1.0, 2.0, 4.0}) {
        ImperfectionConfig imp;
        imp.eccentricity_mm = e;
        const Simulator sim(EncoderGeometry{}, imp);
        double lo = 1e9, hi = -1e9;
        for (int i = 0; i < 36000; ++i) {
            const double b = -180.0 + 0.01 * i;
            const Direction d = i % 2 ? Direction::clockwise : Direction::counter_clockwise;
            const double r = sim.effective_angle_deg(b, d) - b - sim.backlash_term_deg(b, d)
                - sim.nonlinearity_term_deg(b);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        const double p2p = deg_to_arcsec(hi - lo);
        EXPECT_NEAR(p2p, 425.0 * e, 0.01 * 425.0 * e);
    }
}

TEST(Imperfections, BacklashFlipsWithDirection)
{
    const Simulator sim(EncoderGeometry{}, ImperfectionConfig{});
    for (double b : {-120.0, 0.0, 77.0})
        EXPECT_DOUBLE_EQ(sim.backlash_term_deg(b, Direction::clockwise),
                         -sim.backlash_term_deg(b, Direction::counter_clockwise));
}

TEST(Dataset, CoversEveryDegreeOutsideTheExcludedBand)
{
    const auto ds = generate_dataset(16786, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 1);
    ASSERT_EQ(ds.size(), 16786u);
    std::vector<int> bins(360, 0);
    int cw = 0;
    for (const auto& s : ds.samples) {
        EXPECT_LE(std::abs(s.beta_ref_deg), 178.0);
        bins[static_cast<int>(std::floor(s.beta_ref_deg + 180.0))]++;
        cw += s.direction == Direction::clockwise;
        const Sector& sec = ds.layout()[s.true_sector];
        EXPECT_TRUE(sec.start_deg <= s.beta_ref_deg + 1e-6 && s.beta_ref_deg - 1e-6 < sec.end_deg());
    }
    for (int b = 2; b < 358; ++b)
        EXPECT_GT(bins[b], 0) << "bin " << b - 180;
    EXPECT_NEAR(cw / 16786.0, 0.5, 0.05);
}

TEST(Dataset, SameSeedIsIdenticalAndSamplesUseTheirOwnStream)
{
    const EncoderGeometry g;
    const ImperfectionConfig imp;
    const auto a = generate_dataset(150, g, imp, Schedule{}, 42);
    const auto b = generate_dataset(150, g, imp, Schedule{}, 42);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.samples[i].beta_ref_deg, b.samples[i].beta_ref_deg);
        EXPECT_EQ(a.samples[i].direction, b.samples[i].direction);
        EXPECT_EQ(a.samples[i].intensity, b.samples[i].intensity);
    }
    // Any single sample can be regenerated in isolation.
    const Simulator sim(g, imp);
    const auto pos = sweep_positions(150, imp, Schedule{}, 42);
    auto rng = stream_rng(42, 77);
    const auto sums = sim.column_sums(pos[77].first, pos[77].second, &rng);
    EXPECT_EQ(intensity_from_column_sums<float>(sums, 2592), a.samples[77].intensity);
    const auto c = generate_dataset(150, g, imp, Schedule{}, 43);
    EXPECT_NE(a.samples[0].beta_ref_deg, c.samples[0].beta_ref_deg);
}

TEST(Dataset, ReferenceAnglesAreQuantisedTrueAngles)
{
    const ImperfectionConfig imp;
    const auto ds = generate_dataset(300, EncoderGeometry{}, imp, Schedule{}, 5);
    const auto pos = sweep_positions(300, imp, Schedule{}, 5);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double q = deg_to_arcsec(ds.samples[i].beta_ref_deg) / 0.21;
        EXPECT_NEAR(q, std::round(q), 1e-6);
        EXPECT_LE(std::abs(ds.samples[i].beta_ref_deg - pos[i].first), arcsec_to_deg(0.105) + 1e-12);
    }
}

TEST(Dataset, SweepsAlternateDirection)
{
    const auto pos = sweep_positions(2000, ImperfectionConfig{}, Schedule{}, 9);
    int turns = 0;
    for (std::size_t i = 1; i < pos.size(); ++i) {
        if (pos[i].second != pos[i - 1].second) {
            ++turns;
            continue;
        }
        if (pos[i - 1].second == Direction::clockwise)
            EXPECT_GT(pos[i].first, pos[i - 1].first);
        else
            EXPECT_LT(pos[i].first, pos[i - 1].first);
    }
    EXPECT_GE(turns, 3);
}

TEST(Dataset, ImagesCanBeKept)
{
    Schedule sch;
    sch.keep_images = true;
    const auto ds = generate_dataset(3, EncoderGeometry{}, ImperfectionConfig{}, sch, 1);
    for (const auto& s : ds.samples) {
        ASSERT_TRUE(s.image.has_value());
        EXPECT_EQ(intensity_vectors(*s.image).cast<float>(), s.intensity);
    }
    EXPECT_THROW(generate_dataset(0, EncoderGeometry{}, ImperfectionConfig{}, Schedule{}, 1), ConfigError);
}
