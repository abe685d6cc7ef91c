#pragma once

// Seeded shot campaigns. Every shot draws from its own counter-based stream
// keyed by (seed, wait index, arm, shot index), so the record set does not
// depend on thread count, shard layout, or evaluation order.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "lgsim/protocols.h"
#include "lgsim/random.h"

namespace lgsim {

enum class ProtocolKind {
    /// Constant Q(t2) designation: arms WithoutQ2, InterceptUp, InterceptDown.
    LeggettGarg,
    /// Dichotomic Q(t2): adds EarlyReadout for <Q(t2)Q(t1)>.
    Dichotomic,
};

enum class Arm : std::uint8_t { WithoutQ2 = 0, InterceptUp = 1, InterceptDown = 2, EarlyReadout = 3 };
inline constexpr std::size_t kArmCount = 4;

std::string_view to_string(ProtocolKind p) noexcept;
std::string_view to_string(Arm a) noexcept;
ProtocolKind protocol_from_string(std::string_view name);
Arm arm_from_string(std::string_view name);

struct ImperfectionModel {
    /// Probability that the atom starts in Down instead of Up.
    double prep_error = 0.01;
    /// Probability that a D1/D2 label is reported swapped. Never affects
    /// removed shots.
    double readout_error = 0.01;
    double t1_us = std::numeric_limits<double>::infinity();

    static ImperfectionModel ideal() { return {0.0, 0.0, std::numeric_limits<double>::infinity()}; }
    void validate() const;
};

struct ShotRecord {
    ProtocolKind protocol = ProtocolKind::LeggettGarg;
    Arm arm = Arm::WithoutQ2;
    double wait_us = 0.0;
    ShotOutcome outcome = ShotOutcome::D2;
    std::uint64_t shot_index = 0;

    friend bool operator==(const ShotRecord&, const ShotRecord&) = default;
};

struct CampaignConfig {
    ProtocolKind protocol = ProtocolKind::LeggettGarg;
    /// Template; wait_us and intercept are set per point and arm, t1_us is
    /// taken from the imperfection model.
    RamseyConfig ramsey{};
    ImperfectionModel imperfections{};
    std::uint64_t shots_per_arm = 1000;
    std::uint64_t seed = 0;
    std::vector<double> wait_grid_us{};
    /// Re-derive the second-pulse phase correction at every wait value.
    bool calibrate_phase = true;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    std::span<const Arm> arms() const noexcept;
    std::uint64_t total_shots() const noexcept;
};

/// Fully resolved Ramsey settings for one wait value (phase calibrated if
/// requested, T1 from the imperfection model, no intercept).
RamseyConfig point_config(const CampaignConfig& config, std::size_t wait_index);

/// Injective over wait_index < 2^22, arm < 4, shot_index < 2^40.
StreamSeed derive_arm_seed(std::uint64_t seed, std::uint64_t wait_index, Arm arm, std::uint64_t shot_index);

/// One shot of one arm, imperfections included.
ShotOutcome run_arm_shot(const RamseyConfig& point, const ImperfectionModel& imperfections, Arm arm,
                         CounterRng& rng);

/// Exact outcome probabilities of run_arm_shot (preparation mixture and
/// label noise included).
OutcomeDistribution exact_arm_distribution(const RamseyConfig& point, const ImperfectionModel& imperfections,
                                           Arm arm);

/// All records ordered by (wait index, arm, shot index). Output is
/// identical for any thread count.
std::vector<ShotRecord> sample_campaign(const CampaignConfig& config, unsigned threads = 1);

/// Records whose global index i satisfies i % shard_count == shard.
std::vector<ShotRecord> sample_campaign_shard(const CampaignConfig& config, std::size_t shard,
                                              std::size_t shard_count);

/// Deterministic merge of shard outputs into campaign order.
std::vector<ShotRecord> merge_shards(std::vector<std::vector<ShotRecord>> shards);

struct BandPoint {
    double wait_us = 0.0;
    double k_low = 0.0;
    double k_high = 0.0;
};

/// K = 1 + c(t) at both ends of the coherence-time interval.
std::vector<BandPoint> theory_band(std::span<const double> wait_grid_us, double tau_low_us, double tau_high_us,
                                   CoherenceShape shape);

/// Ideal K = <Q2Q1> + <Q3Q2> - <Q3Q1> from the exact correlators of the
/// campaign's pi/3 sequence, with the coherence time set to each end of the
/// interval. Preparation and readout errors are left out, as in theory_band.
std::vector<BandPoint> dichotomic_theory_band(const CampaignConfig& config, double tau_low_us, double tau_high_us);

// -- dataset I/O --------------------------------------------------------------
//
// Header line "protocol_id,arm,wait_us,outcome,shot_index", then one record per
// line. wait_us uses the shortest representation that round-trips exactly.

inline constexpr std::string_view kRecordHeader = "protocol_id,arm,wait_us,outcome,shot_index";

void write_records(std::ostream& out, std::span<const ShotRecord> records);
/// Throws std::runtime_error with the line number on malformed input.
std::vector<ShotRecord> read_records(std::istream& in);

}  // namespace lgsim
