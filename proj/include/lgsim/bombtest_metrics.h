#pragma once

// Closed-form hypothesis-testing figures of merit for the interaction-free
// bomb tester. Unbalanced splitters follow the two-identical-splitters model
// used by run_mz_bomb_test: with branch-B probability eps, a live bomb
// explodes with probability eps and is rescued (D1) with (1 - eps) * eps.

#include <cstdint>

namespace lgsim {

struct TestFigures {
    /// 1 - beta: live bomb flagged at D1 without exploding, single trial.
    double power = 0.0;
    /// Type-I error: a dud flagged at D1.
    double alpha = 0.0;
    double explode_prob = 0.0;
    /// Live bomb reaching D2 (no decision).
    double inconclusive_prob = 0.0;
};

TestFigures single_trial_figures(double branch_b_probability, double contrast);

/// Rescue probability when the test is repeated until D1 or an explosion:
/// (1 - eps) / (2 - eps). Tends to 1/2 as eps -> 0 but never reaches it.
double repeated_trial_power(double branch_b_probability);

/// (1 - W) / 2 for a quantum witness W in [0, 1].
double alpha_from_witness(double witness);

/// Smallest Zeno cycle count whose rescue probability reaches
/// `target_power`, searched by doubling then bisection.
std::uint64_t zeno_cycles_for_power(double target_power);

}  // namespace lgsim
