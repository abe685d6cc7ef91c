#include "lgsim/bombtest_metrics.h"

#include <stdexcept>
#include <string>

#include "lgsim/protocols.h"

namespace lgsim {

TestFigures single_trial_figures(double branch_b_probability, double contrast) {
    const double eps = branch_b_probability;
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::invalid_argument("branch_b_probability must lie in (0, 1), got " + std::to_string(eps));
    }
    if (!(contrast >= 0.0 && contrast <= 1.0)) {
        throw std::invalid_argument("contrast must lie in [0, 1], got " + std::to_string(contrast));
    }
    TestFigures f;
    f.power = (1.0 - eps) * eps;
    f.explode_prob = eps;
    f.inconclusive_prob = (1.0 - eps) * (1.0 - eps);
    f.alpha = 0.5 * (1.0 - contrast);
    return f;
}

double repeated_trial_power(double branch_b_probability) {
    const double eps = branch_b_probability;
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::invalid_argument("branch_b_probability must lie in (0, 1), got " + std::to_string(eps));
    }
    return (1.0 - eps) / (2.0 - eps);
}

double alpha_from_witness(double witness) {
    if (!(witness >= 0.0 && witness <= 1.0)) {
        throw std::invalid_argument("witness must lie in [0, 1], got " + std::to_string(witness));
    }
    return 0.5 * (1.0 - witness);
}

std::uint64_t zeno_cycles_for_power(double target_power) {
    if (!(target_power > 0.0 && target_power < 1.0)) {
        throw std::invalid_argument("target power must lie in (0, 1), got " + std::to_string(target_power));
    }
    // zeno_success_probability is non-decreasing from N = 1 (where it is 0).
    std::uint64_t hi = 1;
    while (zeno_success_probability(hi) < target_power) {
        if (hi > (std::uint64_t{1} << 52)) throw std::domain_error("target power out of numeric reach");
        hi *= 2;
    }
    std::uint64_t lo = hi / 2;  // fails the target (or is 0)
    while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (zeno_success_probability(mid) >= target_power) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace lgsim
