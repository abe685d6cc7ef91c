#pragma once

// Experiment sequences composed from the qubit channels: the Ramsey
// interferometer with and without the intermediate negative measurement,
// the dichotomic pi/3 variant, and the optical Mach-Zehnder bomb tests.
//
// Detector convention: D1 <-> Up <-> Q = +1, D2 <-> Down <-> Q = -1.
// With both pulses at the same phase, two pi/2 pulses send Up to Down, so
// D2 is the bright port and D1 the dark port.

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string_view>

#include "lgsim/qubit.h"
#include "lgsim/random.h"

namespace lgsim {

enum class ShotOutcome { D1, D2, Removed };

std::string_view to_string(ShotOutcome o) noexcept;
ShotOutcome shot_outcome_from_string(std::string_view name);
constexpr ShotOutcome detector_for(Branch b) noexcept { return b == Branch::Up ? ShotOutcome::D1 : ShotOutcome::D2; }
/// +1 for D1, -1 for D2. Removed has no value.
int q_value(ShotOutcome o);

struct RamseyConfig {
    double pulse_theta = std::numbers::pi / 2.0;
    /// Phase of the first pulse; the second pulse nominally shares it.
    double pulse_phi = 0.0;
    /// Uncontrolled phase error on the second pulse.
    double phase_offset = 0.0;
    /// Adjustable correction on the second pulse (see calibrate_phase).
    double phase_adjust = 0.0;
    double wait_us = 0.0;
    CoherenceModel coherence{};
    double t1_us = std::numeric_limits<double>::infinity();
    /// Branch removed by the negative measurement at t2; empty means no Q(t2).
    std::optional<Branch> intercept;

    /// Throws std::invalid_argument on the first violated invariant.
    void validate() const;
    Pulse first_pulse() const { return {pulse_theta, pulse_phi}; }
    Pulse second_pulse() const { return {pulse_theta, pulse_phi + phase_offset + phase_adjust}; }
};

struct OutcomeDistribution {
    double d1 = 0.0;
    double d2 = 0.0;
    double removed = 0.0;

    double probability(ShotOutcome o) const noexcept;
};

/// One shot: prepare `initial` -> pulse -> [negative measurement] -> dephasing
/// -> spin flips -> pulse -> projective readout.
ShotOutcome run_ramsey(const RamseyConfig& config, Branch initial, CounterRng& rng);
inline ShotOutcome run_ramsey(const RamseyConfig& config, CounterRng& rng) {
    return run_ramsey(config, Branch::Up, rng);
}

/// Exact outcome probabilities of run_ramsey, by channel algebra.
OutcomeDistribution ramsey_outcome_distribution(const RamseyConfig& config, Branch initial = Branch::Up);

/// Readout immediately after the first pulse (the t2 measurement of the
/// dichotomic <Q(t2)Q(t1)> correlator).
ShotOutcome run_early_readout(const RamseyConfig& config, Branch initial, CounterRng& rng);
OutcomeDistribution early_readout_distribution(const RamseyConfig& config, Branch initial = Branch::Up);

// -- dichotomic designation --------------------------------------------------

enum class CorrelationPair { Q2Q1, Q3Q2, Q3Q1 };

struct DichotomicPair {
    int early = 1;
    int late = 1;
};

/// Samples one (Q_early, Q_late) pair for the requested correlator. For Q3Q2
/// the intercepted branch is chosen by a fair coin and shots where the atom
/// was removed return std::nullopt. Requires pulse_theta == pi/3.
std::optional<DichotomicPair> run_dichotomic(const RamseyConfig& config, CorrelationPair pair, CounterRng& rng);

/// Exact post-selected expectation of Q_early * Q_late.
double dichotomic_correlator(const RamseyConfig& config, CorrelationPair pair);

/// Second-pulse phase correction that minimizes the D1 probability without
/// Q(t2): a 1024-point grid followed by golden-section refinement. Returns an
/// angle in [-pi, pi).
double calibrate_phase(const RamseyConfig& config);

// -- optical Mach-Zehnder bomb test -------------------------------------------

struct BombTestConfig {
    bool bomb_present = true;
    /// First-splitter probability of taking branch B (0.5 for 50:50).
    double branch_b_probability = 0.5;
    /// Fringe contrast of the unobstructed interferometer.
    double contrast = 1.0;

    void validate() const;
};

enum class BombOutcome { D1, D2, Exploded };
enum class RepeatedOutcome { Rescued, Exploded, Inconclusive };

BombOutcome run_mz_bomb_test(const BombTestConfig& config, CounterRng& rng);

/// Repeats the single test until D1 (rescued), an explosion, or `max_rounds`
/// rounds ending in D2. Only defined for a live bomb.
RepeatedOutcome run_repeated_bomb_test(const BombTestConfig& config, std::uint64_t max_rounds, CounterRng& rng);

/// cos^(2N)(pi/(2N)): probability of rescuing a live bomb with the N-cycle
/// Zeno scheme (each cycle rotates the amplitude by pi/(2N), a Bloch pulse
/// area of pi/N, and then intercepts the rotated branch).
double zeno_success_probability(std::uint64_t n_cycles);

/// One Zeno shot simulated channel by channel; true if the bomb was
/// rescued.
bool run_zeno_shot(std::uint64_t n_cycles, CounterRng& rng);

}  // namespace lgsim
