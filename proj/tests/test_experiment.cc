#include "lgsim/experiment.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace lgsim {
namespace {

constexpr double kPi = std::numbers::pi;

CampaignConfig small_campaign(ProtocolKind kind = ProtocolKind::LeggettGarg) {
    CampaignConfig c;
    c.protocol = kind;
    if (kind == ProtocolKind::Dichotomic) c.ramsey.pulse_theta = kPi / 3.0;
    c.seed = 1234;
    c.shots_per_arm = 300;
    c.wait_grid_us = {0.0, 12.5, 130.0};
    return c;
}

TEST(Experiment, NamesRoundTrip) {
    for (Arm a : {Arm::WithoutQ2, Arm::InterceptUp, Arm::InterceptDown, Arm::EarlyReadout}) {
        EXPECT_EQ(arm_from_string(to_string(a)), a);
    }
    EXPECT_EQ(protocol_from_string("lg"), ProtocolKind::LeggettGarg);
    EXPECT_EQ(protocol_from_string("dichotomic"), ProtocolKind::Dichotomic);
    EXPECT_THROW(protocol_from_string("LG"), std::invalid_argument);
    EXPECT_THROW(arm_from_string("with_q2"), std::invalid_argument);
}

TEST(Experiment, ArmsPerProtocol) {
    EXPECT_EQ(small_campaign().arms().size(), 3u);
    EXPECT_EQ(small_campaign(ProtocolKind::Dichotomic).arms().size(), 4u);
    EXPECT_EQ(small_campaign().total_shots(), 300u * 3u * 3u);
}

TEST(Experiment, ArmSeedsAreDistinct) {
    std::set<StreamSeed> seen;
    for (std::uint64_t w = 0; w < 4; ++w) {
        for (Arm a : {Arm::WithoutQ2, Arm::InterceptUp, Arm::InterceptDown, Arm::EarlyReadout}) {
            for (std::uint64_t s = 0; s < 200; ++s) ASSERT_TRUE(seen.insert(derive_arm_seed(9, w, a, s)).second);
        }
    }
    EXPECT_NE(derive_arm_seed(1, 0, Arm::WithoutQ2, 0), derive_arm_seed(2, 0, Arm::WithoutQ2, 0));
    EXPECT_THROW(derive_arm_seed(1, 0, Arm::WithoutQ2, std::uint64_t{1} << 40), std::invalid_argument);
    EXPECT_THROW(derive_arm_seed(1, std::uint64_t{1} << 22, Arm::WithoutQ2, 0), std::invalid_argument);
}

TEST(Experiment, CounterStreamsAreIndependentOfCreationOrder) {
    CounterRng a(StreamSeed{5, 6});
    std::vector<std::uint64_t> first;
    for (int i = 0; i < 10; ++i) first.push_back(a());
    CounterRng other(StreamSeed{5, 7});
    other();
    CounterRng b(StreamSeed{5, 6});
    for (int i = 0; i < 10; ++i) EXPECT_EQ(b(), first[i]);
    CounterRng u(StreamSeed{1, 1});
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform01();
        ASSERT_GE(x, 0.0);
        ASSERT_LT(x, 1.0);
    }
}

TEST(Experiment, ValidationNamesTheField) {
    CampaignConfig c = small_campaign();
    c.wait_grid_us = {};
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_campaign();
    c.wait_grid_us = {5.0, 5.0};
    try {
        c.validate();
        FAIL() << "expected a throw";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("wait_grid_us"), std::string::npos);
    }
    c = small_campaign();
    c.imperfections.readout_error = 0.5;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_campaign();
    c.shots_per_arm = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_campaign(ProtocolKind::Dichotomic);
    c.ramsey.pulse_theta = kPi / 2.0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = small_campaign();
    c.wait_grid_us = {0.0, std::numeric_limits<double>::infinity()};
    EXPECT_NO_THROW(c.validate());
}

TEST(Experiment, PointConfigCalibratesEachWait) {
    CampaignConfig c = small_campaign();
    c.ramsey.phase_offset = 0.4;
    const RamseyConfig p = point_config(c, 1);
    EXPECT_EQ(p.wait_us, 12.5);
    EXPECT_FALSE(p.intercept.has_value());
    EXPECT_NEAR(p.phase_adjust, -0.4, 1e-6);
    c.calibrate_phase = false;
    EXPECT_EQ(point_config(c, 1).phase_adjust, 0.0);
}

TEST(Experiment, ExactArmDistributionMatchesMixtureOracle) {
    // pi/2 pulses, calibrated: P(Up at readout | prep Up) = (1 - c)/2 and
    // (1 + c)/2 for prep Down; then the label flip.
    CampaignConfig c = small_campaign();
    c.imperfections = {0.03, 0.07, std::numeric_limits<double>::infinity()};
    const RamseyConfig p = point_config(c, 2);
    const double coh = std::exp(-1.0);
    const double up = 0.97 * (1.0 - coh) / 2.0 + 0.03 * (1.0 + coh) / 2.0;
    const double d1 = up * 0.93 + (1.0 - up) * 0.07;
    const auto d = exact_arm_distribution(p, c.imperfections, Arm::WithoutQ2);
    EXPECT_NEAR(d.d1, d1, 1e-12);
    EXPECT_NEAR(d.d2, 1.0 - d1, 1e-12);
    EXPECT_EQ(d.removed, 0.0);
    const auto i = exact_arm_distribution(p, c.imperfections, Arm::InterceptUp);
    EXPECT_NEAR(i.removed, 0.5, 1e-12);
    EXPECT_NEAR(i.d1, 0.25, 1e-12);
}

TEST(Experiment, SampledArmsMatchExactDistribution) {
    CampaignConfig c = small_campaign(ProtocolKind::Dichotomic);
    c.shots_per_arm = 40000;
    c.wait_grid_us = {40.0};
    c.imperfections = {0.02, 0.05, 500.0};
    const auto records = sample_campaign(c);
    const RamseyConfig p = point_config(c, 0);
    for (Arm a : c.arms()) {
        std::array<int, 3> n{};
        for (const auto& r : records) {
            if (r.arm == a) ++n[static_cast<int>(r.outcome)];
        }
        const auto exact = exact_arm_distribution(p, c.imperfections, a);
        for (ShotOutcome o : {ShotOutcome::D1, ShotOutcome::D2, ShotOutcome::Removed}) {
            const double q = exact.probability(o);
            const double se = std::sqrt(q * (1.0 - q) / c.shots_per_arm);
            EXPECT_LE(std::abs(n[static_cast<int>(o)] / double(c.shots_per_arm) - q), 5.0 * se + 1e-12)
                << to_string(a) << ' ' << to_string(o);
        }
    }
}

TEST(Experiment, ReadoutErrorNeverTouchesRemovedShots) {
    CampaignConfig c = small_campaign();
    c.shots_per_arm = 2000;
    c.imperfections = {0.0, 0.45, std::numeric_limits<double>::infinity()};
    const auto noisy = sample_campaign(c);
    c.imperfections.readout_error = 0.0;
    const auto clean = sample_campaign(c);
    ASSERT_EQ(noisy.size(), clean.size());
    for (std::size_t i = 0; i < noisy.size(); ++i) {
        ASSERT_EQ(noisy[i].outcome == ShotOutcome::Removed, clean[i].outcome == ShotOutcome::Removed);
    }
}

TEST(Experiment, CampaignOrderAndShape) {
    const CampaignConfig c = small_campaign();
    const auto r = sample_campaign(c);
    ASSERT_EQ(r.size(), c.total_shots());
    std::size_t i = 0;
    for (double w : c.wait_grid_us) {
        for (Arm a : c.arms()) {
            for (std::uint64_t s = 0; s < c.shots_per_arm; ++s, ++i) {
                ASSERT_EQ(r[i].wait_us, w);
                ASSERT_EQ(r[i].arm, a);
                ASSERT_EQ(r[i].shot_index, s);
                ASSERT_EQ(r[i].protocol, ProtocolKind::LeggettGarg);
                if (a == Arm::WithoutQ2) ASSERT_NE(r[i].outcome, ShotOutcome::Removed);
            }
        }
    }
}

TEST(Experiment, ThreadAndShardLayoutDoNotChangeRecords) {
    const CampaignConfig c = small_campaign(ProtocolKind::Dichotomic);
    const auto serial = sample_campaign(c, 1);
    EXPECT_EQ(sample_campaign(c, 3), serial);
    EXPECT_EQ(sample_campaign(c, 16), serial);
    for (std::size_t count : {1u, 2u, 8u, 13u}) {
        std::vector<std::vector<ShotRecord>> shards;
        for (std::size_t k = count; k-- > 0;) shards.push_back(sample_campaign_shard(c, k, count));
        EXPECT_EQ(merge_shards(std::move(shards)), serial) << count;
    }
    EXPECT_THROW(sample_campaign_shard(c, 2, 2), std::invalid_argument);
}

TEST(Experiment, SeedChangesRecords) {
    CampaignConfig c = small_campaign();
    const auto a = sample_campaign(c);
    c.seed += 1;
    EXPECT_NE(sample_campaign(c), a);
}

TEST(Experiment, RecordsRoundTrip) {
    CampaignConfig c = small_campaign(ProtocolKind::Dichotomic);
    c.wait_grid_us = {0.0, 1e-7, 0.1, 123.456789012345, 1e6};
    c.shots_per_arm = 20;
    const auto records = sample_campaign(c);
    std::stringstream ss;
    write_records(ss, records);
    const std::string text = ss.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), kRecordHeader);
    EXPECT_EQ(read_records(ss), records);
    std::istringstream reread(text);
    std::ostringstream again;
    write_records(again, read_records(reread));
    EXPECT_EQ(again.str(), text);
}

TEST(Experiment, MalformedRecordsReportLine) {
    auto parse = [](const std::string& body) {
        std::istringstream in(body);
        return read_records(in);
    };
    const std::string header = std::string(kRecordHeader) + "\n";
    EXPECT_THROW(parse("nope\n"), std::runtime_error);
    EXPECT_EQ(parse(header + "lg,intercept_up,5,removed,0\n").size(), 1u);
    try {
        parse(header + "lg,without_q2,5,D1,0\nlg,without_q2,5,D1\n");
        FAIL() << "expected a throw";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse(header + "lg,without_q2,5,removed,0\n"), std::runtime_error);
    EXPECT_THROW(parse(header + "lg,sideways,5,D1,0\n"), std::runtime_error);
    EXPECT_THROW(parse(header + "lg,without_q2,5x,D1,0\n"), std::runtime_error);
    EXPECT_THROW(parse(header + "lg,without_q2,5,D3,0\n"), std::runtime_error);
    EXPECT_THROW(parse(header + "lg,without_q2,5,D1,-1\n"), std::runtime_error);
}

TEST(Experiment, TheoryBandEndpoints) {
    const std::vector<double> grid{0.0, 100.0, 800.0};
    const auto band = theory_band(grid, 75.0, 200.0, CoherenceShape::Exponential);
    ASSERT_EQ(band.size(), 3u);
    EXPECT_DOUBLE_EQ(band[0].k_low, 2.0);
    EXPECT_DOUBLE_EQ(band[0].k_high, 2.0);
    EXPECT_NEAR(band[1].k_low, 1.0 + std::exp(-100.0 / 75.0), 1e-15);
    EXPECT_NEAR(band[1].k_high, 1.0 + std::exp(-0.5), 1e-15);
    for (const auto& b : band) EXPECT_LE(b.k_low, b.k_high);
    EXPECT_THROW(theory_band(grid, 200.0, 75.0, CoherenceShape::Exponential), std::invalid_argument);
}

TEST(Experiment, DichotomicBandBracketsIdealValue) {
    CampaignConfig c = small_campaign(ProtocolKind::Dichotomic);
    c.wait_grid_us = {0.0, 50.0, 1e5};
    const auto band = dichotomic_theory_band(c, 75.0, 200.0);
    EXPECT_NEAR(band[0].k_low, 1.5, 1e-12);
    EXPECT_NEAR(band[0].k_high, 1.5, 1e-12);
    EXPECT_LT(band[1].k_low, band[1].k_high);
    EXPECT_LT(band[1].k_high, 1.5);
    // Fully decohered: Q3Q1 = cos^2(pi/3) = 1/4 while the other two stay 1/2.
    EXPECT_NEAR(band[2].k_low, 0.75, 1e-9);
    // K = 3/4 + 3c/4 in between.
    EXPECT_NEAR(band[1].k_low, 0.75 + 0.75 * std::exp(-50.0 / 75.0), 1e-12);
}

}  // namespace
}  // namespace lgsim
