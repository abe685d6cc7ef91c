#include "lgsim/experiment.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <thread>

namespace lgsim {

namespace {

constexpr std::array<Arm, 3> kLgArms{Arm::WithoutQ2, Arm::InterceptUp, Arm::InterceptDown};
constexpr std::array<Arm, 4> kDichotomicArms{Arm::WithoutQ2, Arm::InterceptUp, Arm::InterceptDown,
                                             Arm::EarlyReadout};

constexpr std::uint64_t kShotBits = 40;
constexpr std::uint64_t kArmBits = 2;
constexpr std::uint64_t kWaitBits = 64 - kShotBits - kArmBits;

// The message is built only when the check fails; `what` may be a string or
// a callable returning one.
template <typename Msg>
void require(bool ok, Msg&& what) {
    if (ok) return;
    if constexpr (std::is_invocable_v<Msg>) {
        throw std::invalid_argument(what());
    } else {
        throw std::invalid_argument(std::string(what));
    }
}

ShotOutcome flip_label(ShotOutcome o) {
    switch (o) {
        case ShotOutcome::D1: return ShotOutcome::D2;
        case ShotOutcome::D2: return ShotOutcome::D1;
        case ShotOutcome::Removed: break;
    }
    return o;
}

RamseyConfig arm_config(RamseyConfig point, Arm arm) {
    switch (arm) {
        case Arm::InterceptUp: point.intercept = Branch::Up; break;
        case Arm::InterceptDown: point.intercept = Branch::Down; break;
        case Arm::WithoutQ2:
        case Arm::EarlyReadout: point.intercept.reset(); break;
    }
    return point;
}

OutcomeDistribution ideal_arm_distribution(const RamseyConfig& point, Arm arm, Branch initial) {
    const RamseyConfig cfg = arm_config(point, arm);
    return arm == Arm::EarlyReadout ? early_readout_distribution(cfg, initial)
                                    : ramsey_outcome_distribution(cfg, initial);
}

// Shared per-campaign state so every shot of a wait point reuses the same
// calibrated settings.
struct CampaignPlan {
    const CampaignConfig& config;
    std::span<const Arm> arms;
    std::vector<RamseyConfig> points;

    explicit CampaignPlan(const CampaignConfig& c) : config(c), arms(c.arms()) {
        c.validate();
        points.reserve(c.wait_grid_us.size());
        for (std::size_t w = 0; w < c.wait_grid_us.size(); ++w) points.push_back(point_config(c, w));
    }

    ShotRecord shot(std::uint64_t global_index) const {
        const std::uint64_t per_wait = config.shots_per_arm * arms.size();
        const std::uint64_t w = global_index / per_wait;
        const std::uint64_t rem = global_index % per_wait;
        const Arm arm = arms[rem / config.shots_per_arm];
        const std::uint64_t s = rem % config.shots_per_arm;
        CounterRng rng(derive_arm_seed(config.seed, w, arm, s));
        return {config.protocol, arm, config.wait_grid_us[w], run_arm_shot(points[w], config.imperfections, arm, rng),
                s};
    }
};

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

}  // namespace

std::string_view to_string(ProtocolKind p) noexcept {
    return p == ProtocolKind::LeggettGarg ? "lg" : "dichotomic";
}

std::string_view to_string(Arm a) noexcept {
    switch (a) {
        case Arm::WithoutQ2: return "without_q2";
        case Arm::InterceptUp: return "intercept_up";
        case Arm::InterceptDown: return "intercept_down";
        case Arm::EarlyReadout: return "early_readout";
    }
    return "?";
}

ProtocolKind protocol_from_string(std::string_view name) {
    if (name == "lg") return ProtocolKind::LeggettGarg;
    if (name == "dichotomic") return ProtocolKind::Dichotomic;
    throw std::invalid_argument("unknown protocol_id '" + std::string(name) + "'");
}

Arm arm_from_string(std::string_view name) {
    for (Arm a : kDichotomicArms) {
        if (to_string(a) == name) return a;
    }
    throw std::invalid_argument("unknown arm '" + std::string(name) + "'");
}

void ImperfectionModel::validate() const {
    require(prep_error >= 0.0 && prep_error < 0.5, "prep_error must lie in [0, 0.5)");
    require(readout_error >= 0.0 && readout_error < 0.5, "readout_error must lie in [0, 0.5)");
    require(t1_us > 0.0, "t1_us must be positive");
}

void CampaignConfig::validate() const {
    require(shots_per_arm >= 1, "shots_per_arm must be at least 1");
    require(shots_per_arm < (std::uint64_t{1} << kShotBits), "shots_per_arm too large");
    require(!wait_grid_us.empty(), "wait_grid_us must not be empty");
    require(wait_grid_us.size() < (std::uint64_t{1} << kWaitBits), "wait_grid_us too long");
    for (std::size_t i = 0; i < wait_grid_us.size(); ++i) {
        require(wait_grid_us[i] >= 0.0, "wait_grid_us values must be non-negative");
        if (i > 0) require(wait_grid_us[i] > wait_grid_us[i - 1], "wait_grid_us must be strictly increasing");
    }
    imperfections.validate();
    RamseyConfig probe = ramsey;
    probe.t1_us = imperfections.t1_us;
    probe.validate();
    if (protocol == ProtocolKind::Dichotomic) {
        require(std::abs(ramsey.pulse_theta - std::numbers::pi / 3.0) <= 1e-12,
                "dichotomic campaigns require pulse_theta = pi/3");
    }
}

std::span<const Arm> CampaignConfig::arms() const noexcept {
    if (protocol == ProtocolKind::Dichotomic) return kDichotomicArms;
    return kLgArms;
}

std::uint64_t CampaignConfig::total_shots() const noexcept {
    return shots_per_arm * arms().size() * wait_grid_us.size();
}

RamseyConfig point_config(const CampaignConfig& config, std::size_t wait_index) {
    RamseyConfig point = config.ramsey;
    point.intercept.reset();
    point.wait_us = config.wait_grid_us.at(wait_index);
    point.t1_us = config.imperfections.t1_us;
    if (config.calibrate_phase) point.phase_adjust = calibrate_phase(point);
    return point;
}

StreamSeed derive_arm_seed(std::uint64_t seed, std::uint64_t wait_index, Arm arm, std::uint64_t shot_index) {
    require(wait_index < (std::uint64_t{1} << kWaitBits), "wait_index out of range");
    require(shot_index < (std::uint64_t{1} << kShotBits), "shot_index out of range");
    const auto a = static_cast<std::uint64_t>(arm);
    return {seed, (wait_index << (kShotBits + kArmBits)) | (a << kShotBits) | shot_index};
}

ShotOutcome run_arm_shot(const RamseyConfig& point, const ImperfectionModel& imperfections, Arm arm,
                         CounterRng& rng) {
    const Branch initial = rng.uniform01() < imperfections.prep_error ? Branch::Down : Branch::Up;
    const RamseyConfig cfg = arm_config(point, arm);
    ShotOutcome o = arm == Arm::EarlyReadout ? run_early_readout(cfg, initial, rng) : run_ramsey(cfg, initial, rng);
    if (o != ShotOutcome::Removed && rng.uniform01() < imperfections.readout_error) o = flip_label(o);
    return o;
}

OutcomeDistribution exact_arm_distribution(const RamseyConfig& point, const ImperfectionModel& imperfections,
                                           Arm arm) {
    imperfections.validate();
    const double pe = imperfections.prep_error;
    const auto up = ideal_arm_distribution(point, arm, Branch::Up);
    const auto down = ideal_arm_distribution(point, arm, Branch::Down);
    OutcomeDistribution mixed{(1.0 - pe) * up.d1 + pe * down.d1, (1.0 - pe) * up.d2 + pe * down.d2,
                              (1.0 - pe) * up.removed + pe * down.removed};
    const double e = imperfections.readout_error;
    return {mixed.d1 * (1.0 - e) + mixed.d2 * e, mixed.d2 * (1.0 - e) + mixed.d1 * e, mixed.removed};
}

std::vector<ShotRecord> sample_campaign(const CampaignConfig& config, unsigned threads) {
    const CampaignPlan plan(config);
    const std::uint64_t total = config.total_shots();
    std::vector<ShotRecord> records(total);
    const std::uint64_t workers = std::clamp<std::uint64_t>(threads, 1, std::max<std::uint64_t>(total, 1));
    auto fill = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t i = begin; i < end; ++i) records[i] = plan.shot(i);
    };
    if (workers == 1) {
        fill(0, total);
        return records;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::uint64_t t = 0; t < workers; ++t) {
        pool.emplace_back(fill, total * t / workers, total * (t + 1) / workers);
    }
    pool.clear();
    return records;
}

std::vector<ShotRecord> sample_campaign_shard(const CampaignConfig& config, std::size_t shard,
                                              std::size_t shard_count) {
    require(shard_count >= 1 && shard < shard_count, "invalid shard index");
    const CampaignPlan plan(config);
    std::vector<ShotRecord> records;
    for (std::uint64_t i = shard; i < config.total_shots(); i += shard_count) records.push_back(plan.shot(i));
    return records;
}

std::vector<ShotRecord> merge_shards(std::vector<std::vector<ShotRecord>> shards) {
    std::vector<ShotRecord> merged;
    for (auto& s : shards) merged.insert(merged.end(), s.begin(), s.end());
    // wait_us is strictly increasing in the grid, so it orders like the wait index.
    std::sort(merged.begin(), merged.end(), [](const ShotRecord& a, const ShotRecord& b) {
        if (a.wait_us != b.wait_us) return a.wait_us < b.wait_us;
        if (a.arm != b.arm) return a.arm < b.arm;
        return a.shot_index < b.shot_index;
    });
    return merged;
}

std::vector<BandPoint> theory_band(std::span<const double> wait_grid_us, double tau_low_us, double tau_high_us,
                                   CoherenceShape shape) {
    require(tau_low_us > 0.0 && tau_low_us < tau_high_us, "theory band needs 0 < tau_low < tau_high");
    const CoherenceModel low{shape, tau_low_us};
    const CoherenceModel high{shape, tau_high_us};
    std::vector<BandPoint> band;
    band.reserve(wait_grid_us.size());
    for (double w : wait_grid_us) band.push_back({w, 1.0 + low.factor(w), 1.0 + high.factor(w)});
    return band;
}

std::vector<BandPoint> dichotomic_theory_band(const CampaignConfig& config, double tau_low_us, double tau_high_us) {
    require(tau_low_us > 0.0 && tau_low_us < tau_high_us, "theory band needs 0 < tau_low < tau_high");
    auto k_at = [&](std::size_t w, double tau) {
        RamseyConfig point = point_config(config, w);
        point.coherence.tau_us = tau;
        return dichotomic_correlator(point, CorrelationPair::Q2Q1) + dichotomic_correlator(point, CorrelationPair::Q3Q2) -
               dichotomic_correlator(point, CorrelationPair::Q3Q1);
    };
    std::vector<BandPoint> band;
    band.reserve(config.wait_grid_us.size());
    for (std::size_t w = 0; w < config.wait_grid_us.size(); ++w) {
        const double a = k_at(w, tau_low_us);
        const double b = k_at(w, tau_high_us);
        band.push_back({config.wait_grid_us[w], std::min(a, b), std::max(a, b)});
    }
    return band;
}

void write_records(std::ostream& out, std::span<const ShotRecord> records) {
    out << kRecordHeader << '\n';
    std::array<char, 64> buf{};
    for (const auto& r : records) {
        const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), r.wait_us);
        out << to_string(r.protocol) << ',' << to_string(r.arm) << ','
            << std::string_view(buf.data(), static_cast<std::size_t>(res.ptr - buf.data())) << ','
            << to_string(r.outcome) << ',' << r.shot_index << '\n';
    }
}

std::vector<ShotRecord> read_records(std::istream& in) {
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line) || line != kRecordHeader) {
        throw std::runtime_error("records: line 1: expected header '" + std::string(kRecordHeader) + "'");
    }
    std::vector<ShotRecord> records;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fail = [&](const std::string& why) {
            return std::runtime_error("records: line " + std::to_string(line_no) + ": " + why);
        };
        const auto f = split_csv(line);
        if (f.size() != 5) throw fail("expected 5 fields, got " + std::to_string(f.size()));
        ShotRecord r;
        try {
            r.protocol = protocol_from_string(f[0]);
            r.arm = arm_from_string(f[1]);
            r.outcome = shot_outcome_from_string(f[3]);
        } catch (const std::invalid_argument& e) {
            throw fail(e.what());
        }
        auto wr = std::from_chars(f[2].data(), f[2].data() + f[2].size(), r.wait_us);
        if (wr.ec != std::errc{} || wr.ptr != f[2].data() + f[2].size()) throw fail("bad wait_us");
        auto sr = std::from_chars(f[4].data(), f[4].data() + f[4].size(), r.shot_index);
        if (sr.ec != std::errc{} || sr.ptr != f[4].data() + f[4].size()) throw fail("bad shot_index");
        if (r.arm == Arm::WithoutQ2 && r.outcome == ShotOutcome::Removed) {
            throw fail("removed outcome in without_q2 arm");
        }
        records.push_back(r);
    }
    return records;
}

}  // namespace lgsim
