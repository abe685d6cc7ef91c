#include "lgsim/protocols.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <type_traits>

namespace lgsim {

namespace {

constexpr double kDichotomicTheta = std::numbers::pi / 3.0;

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

// State just before the final readout, with the survival probability of the
// optional interception folded out.
struct PreReadout {
    QubitState state;
    double survival = 1.0;
};

QubitState evolve_wait(const QubitState& s, const RamseyConfig& c) {
    return apply_spin_flip(apply_dephasing(s, c.wait_us, c.coherence), c.wait_us, c.t1_us);
}

void require_dichotomic(const RamseyConfig& config) {
    require(std::abs(config.pulse_theta - kDichotomicTheta) <= 1e-12,
            [&] { return "dichotomic protocol requires pulse_theta = pi/3, got " + std::to_string(config.pulse_theta); });
}

}  // namespace

std::string_view to_string(ShotOutcome o) noexcept {
    switch (o) {
        case ShotOutcome::D1: return "D1";
        case ShotOutcome::D2: return "D2";
        case ShotOutcome::Removed: return "removed";
    }
    return "?";
}

ShotOutcome shot_outcome_from_string(std::string_view name) {
    if (name == "D1") return ShotOutcome::D1;
    if (name == "D2") return ShotOutcome::D2;
    if (name == "removed") return ShotOutcome::Removed;
    throw std::invalid_argument("unknown shot outcome '" + std::string(name) + "'");
}

int q_value(ShotOutcome o) {
    switch (o) {
        case ShotOutcome::D1: return 1;
        case ShotOutcome::D2: return -1;
        case ShotOutcome::Removed: break;
    }
    throw std::invalid_argument("removed shots carry no Q value");
}

double OutcomeDistribution::probability(ShotOutcome o) const noexcept {
    switch (o) {
        case ShotOutcome::D1: return d1;
        case ShotOutcome::D2: return d2;
        case ShotOutcome::Removed: return removed;
    }
    return 0.0;
}

void RamseyConfig::validate() const {
    require(pulse_theta > 0.0 && pulse_theta <= std::numbers::pi,
            [&] { return "pulse_theta must lie in (0, pi], got " + std::to_string(pulse_theta); });
    require(std::isfinite(pulse_phi), "pulse_phi must be finite");
    require(std::isfinite(phase_offset), "phase_offset must be finite");
    require(std::isfinite(phase_adjust), "phase_adjust must be finite");
    require(wait_us >= 0.0, [&] { return "wait_us must be non-negative, got " + std::to_string(wait_us); });
    require(t1_us > 0.0, [&] { return "t1_us must be positive, got " + std::to_string(t1_us); });
    coherence.validate();
}

ShotOutcome run_ramsey(const RamseyConfig& config, Branch initial, CounterRng& rng) {
    config.validate();
    QubitState state = apply_rotation(pure_state(initial), config.first_pulse());
    if (config.intercept) {
        auto survived = negative_measurement(state, *config.intercept, rng.uniform01());
        if (!survived) return ShotOutcome::Removed;
        state = *survived;
    }
    state = apply_rotation(evolve_wait(state, config), config.second_pulse());
    return detector_for(measure_projective(state, rng.uniform01()).first);
}

OutcomeDistribution ramsey_outcome_distribution(const RamseyConfig& config, Branch initial) {
    config.validate();
    PreReadout pre{apply_rotation(pure_state(initial), config.first_pulse())};
    if (config.intercept) {
        pre.survival = 1.0 - pre.state.population(*config.intercept);
        pre.state = pure_state(opposite(*config.intercept));
    }
    pre.state = apply_rotation(evolve_wait(pre.state, config), config.second_pulse());
    const double p_up = std::clamp(pre.state.rho_uu, 0.0, 1.0);
    return {pre.survival * p_up, pre.survival * (1.0 - p_up), 1.0 - pre.survival};
}

ShotOutcome run_early_readout(const RamseyConfig& config, Branch initial, CounterRng& rng) {
    config.validate();
    const QubitState state = apply_rotation(pure_state(initial), config.first_pulse());
    return detector_for(measure_projective(state, rng.uniform01()).first);
}

OutcomeDistribution early_readout_distribution(const RamseyConfig& config, Branch initial) {
    config.validate();
    const double p_up = std::clamp(apply_rotation(pure_state(initial), config.first_pulse()).rho_uu, 0.0, 1.0);
    return {p_up, 1.0 - p_up, 0.0};
}

std::optional<DichotomicPair> run_dichotomic(const RamseyConfig& config, CorrelationPair pair, CounterRng& rng) {
    require_dichotomic(config);
    RamseyConfig cfg = config;
    cfg.intercept.reset();
    switch (pair) {
        case CorrelationPair::Q2Q1:
            return DichotomicPair{1, q_value(run_early_readout(cfg, Branch::Up, rng))};
        case CorrelationPair::Q3Q1:
            return DichotomicPair{1, q_value(run_ramsey(cfg, Branch::Up, rng))};
        case CorrelationPair::Q3Q2: {
            const Branch intercepted = rng.uniform01() < 0.5 ? Branch::Up : Branch::Down;
            cfg.intercept = intercepted;
            const ShotOutcome o = run_ramsey(cfg, Branch::Up, rng);
            if (o == ShotOutcome::Removed) return std::nullopt;
            // Surviving an Up interception means the atom was Down at t2.
            const int q2 = intercepted == Branch::Up ? -1 : 1;
            return DichotomicPair{q2, q_value(o)};
        }
    }
    throw std::invalid_argument("unknown correlation pair");
}

double dichotomic_correlator(const RamseyConfig& config, CorrelationPair pair) {
    require_dichotomic(config);
    RamseyConfig cfg = config;
    cfg.intercept.reset();
    switch (pair) {
        case CorrelationPair::Q2Q1: {
            const auto d = early_readout_distribution(cfg);
            return d.d1 - d.d2;
        }
        case CorrelationPair::Q3Q1: {
            const auto d = ramsey_outcome_distribution(cfg);
            return d.d1 - d.d2;
        }
        case CorrelationPair::Q3Q2: {
            double num = 0.0;
            double den = 0.0;
            for (Branch b : {Branch::Up, Branch::Down}) {
                cfg.intercept = b;
                const auto d = ramsey_outcome_distribution(cfg);
                const double q2 = b == Branch::Up ? -1.0 : 1.0;
                num += 0.5 * q2 * (d.d1 - d.d2);
                den += 0.5 * (d.d1 + d.d2);
            }
            return num / den;
        }
    }
    throw std::invalid_argument("unknown correlation pair");
}

double calibrate_phase(const RamseyConfig& config) {
    RamseyConfig cfg = config;
    cfg.intercept.reset();
    cfg.validate();
    auto dark = [&cfg](double adjust) {
        cfg.phase_adjust = adjust;
        return ramsey_outcome_distribution(cfg).d1;
    };

    constexpr int kGrid = 1024;
    const double step = kTwoPi / kGrid;
    int best = 0;
    double best_val = dark(0.0);
    for (int k = 1; k < kGrid; ++k) {
        const double v = dark(k * step);
        if (v < best_val) {
            best_val = v;
            best = k;
        }
    }

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = best * step - step;
    double b = best * step + step;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = dark(x1);
    double f2 = dark(x2);
    while (b - a > 1e-12) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = dark(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = dark(x2);
        }
    }
    // Report in [-pi, pi) so that "no correction" reads as ~0 rather than ~2pi.
    double phi = wrap_angle(0.5 * (a + b));
    if (phi >= std::numbers::pi) phi -= kTwoPi;
    return phi;
}

void BombTestConfig::validate() const {
    require(branch_b_probability > 0.0 && branch_b_probability < 1.0,
            [&] { return "branch_b_probability must lie in (0, 1), got " + std::to_string(branch_b_probability); });
    require(contrast >= 0.0 && contrast <= 1.0,
            [&] { return "contrast must lie in [0, 1], got " + std::to_string(contrast); });
}

BombOutcome run_mz_bomb_test(const BombTestConfig& config, CounterRng& rng) {
    config.validate();
    if (!config.bomb_present) {
        return rng.uniform01() < 0.5 * (1.0 - config.contrast) ? BombOutcome::D1 : BombOutcome::D2;
    }
    const double eps = config.branch_b_probability;
    if (rng.uniform01() < eps) return BombOutcome::Exploded;
    // Branch A alone meets the second splitter: dark port with probability eps.
    return rng.uniform01() < eps ? BombOutcome::D1 : BombOutcome::D2;
}

RepeatedOutcome run_repeated_bomb_test(const BombTestConfig& config, std::uint64_t max_rounds, CounterRng& rng) {
    require(config.bomb_present, "repeated bomb test is defined for a live bomb only");
    require(max_rounds >= 1, "max_rounds must be at least 1");
    for (std::uint64_t round = 0; round < max_rounds; ++round) {
        switch (run_mz_bomb_test(config, rng)) {
            case BombOutcome::D1: return RepeatedOutcome::Rescued;
            case BombOutcome::Exploded: return RepeatedOutcome::Exploded;
            case BombOutcome::D2: break;
        }
    }
    return RepeatedOutcome::Inconclusive;
}

double zeno_success_probability(std::uint64_t n_cycles) {
    require(n_cycles >= 1, "Zeno scheme needs at least one cycle");
    const double n = static_cast<double>(n_cycles);
    return std::pow(std::cos(std::numbers::pi / (2.0 * n)), 2.0 * n);
}

bool run_zeno_shot(std::uint64_t n_cycles, CounterRng& rng) {
    require(n_cycles >= 1, "Zeno scheme needs at least one cycle");
    const Pulse step(std::numbers::pi / static_cast<double>(n_cycles), 0.0);
    QubitState state = pure_state(Branch::Up);
    for (std::uint64_t k = 0; k < n_cycles; ++k) {
        auto survived = negative_measurement(apply_rotation(state, step), Branch::Down, rng.uniform01());
        if (!survived) return false;
        state = *survived;
    }
    return true;
}

}  // namespace lgsim
