#pragma once

// Leggett-Garg estimators and their statistical errors.
//
// All estimators post-select: removed shots never enter a mean, and
// n_shots_used counts the surviving D1/D2 shots only. Error bars come from
// two independent resampling routes, a stratified bootstrap with a Gaussian
// fit to the histogram of resampled values and a parametric binomial Monte
// Carlo, whose agreement is itself a check.

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "lgsim/experiment.h"

namespace lgsim {

enum class ErrorMethod { Bootstrap, MonteCarloCP, Exact };
std::string_view to_string(ErrorMethod m) noexcept;

struct EstimateWithError {
    double value = 0.0;
    double sigma = 0.0;
    ErrorMethod method = ErrorMethod::Exact;
    std::uint64_t n_shots_used = 0;
};

struct ArmCounts {
    std::uint64_t d1 = 0;
    std::uint64_t d2 = 0;
    std::uint64_t removed = 0;

    std::uint64_t post_selected() const noexcept { return d1 + d2; }
    std::uint64_t total() const noexcept { return d1 + d2 + removed; }
    ArmCounts& operator+=(const ArmCounts& o) noexcept {
        d1 += o.d1;
        d2 += o.d2;
        removed += o.removed;
        return *this;
    }
};

using ArmTally = std::array<ArmCounts, kArmCount>;

ArmCounts count_outcomes(std::span<const ShotRecord> records);
/// Counts per arm; records of every wait value are pooled.
ArmTally tally_by_arm(std::span<const ShotRecord> records);
inline const ArmCounts& counts(const ArmTally& t, Arm a) { return t[static_cast<std::size_t>(a)]; }

/// Thrown when post-selection leaves nothing to average.
struct EmptySelectionError : std::domain_error {
    using std::domain_error::domain_error;
};

// -- point estimators ---------------------------------------------------------

/// (n_D1 - n_D2) / (n_D1 + n_D2) with its binomial standard error.
EstimateWithError mean_q3(const ArmCounts& c);
EstimateWithError mean_q3(std::span<const ShotRecord> records);

/// K = 1 + <Q3>_with - <Q3>_without, the two intercept arms merged into one
/// dataset.
EstimateWithError estimate_K_simplified(std::span<const ShotRecord> without_q2, std::span<const ShotRecord> intercept_up,
                                        std::span<const ShotRecord> intercept_down);
EstimateWithError estimate_K_simplified(const ArmTally& tally);

struct CorrelationSet {
    EstimateWithError q2q1;
    EstimateWithError q3q2;
    EstimateWithError q3q1;
};

/// Dichotomic correlators: q2q1 from EarlyReadout, q3q1 from WithoutQ2 and
/// q3q2 from the merged intercept arms, where surviving an Up interception
/// means Q(t2) = -1 and surviving a Down interception means Q(t2) = +1.
CorrelationSet dichotomic_correlations(const ArmTally& tally);

/// K = <Q2Q1> + <Q3Q2> - <Q3Q1>.
EstimateWithError estimate_K_dichotomic(const CorrelationSet& correlators);

struct ContrastEstimate {
    EstimateWithError estimate;
    /// True if 1 - 2 p_up fell outside [0, 1] and was clamped.
    bool clamped = false;
};

/// C = 1 - 2 n_D1 / (n_D1 + n_D2) on fringe-minimum records.
ContrastEstimate estimate_contrast(const ArmCounts& c);
ContrastEstimate estimate_contrast(std::span<const ShotRecord> records);

/// W = |K - 1|.
double quantum_witness(double k) noexcept;

/// (K - 1) / sigma. Throws std::invalid_argument for sigma <= 0.
double violation_significance(const EstimateWithError& k);

/// Exact binomial interval. lo = 0 when successes = 0, hi = 1 when
/// successes = trials.
std::pair<double, double> clopper_pearson(std::uint64_t successes, std::uint64_t trials,
                                          double confidence = 0.6827);

// -- resampling ---------------------------------------------------------------

/// Maps per-arm counts to a scalar. May throw EmptySelectionError, in which
/// case the resample is dropped.
using CountStatistic = std::function<double(const ArmTally&)>;

double k_simplified_statistic(const ArmTally& t);
double k_dichotomic_statistic(const ArmTally& t);
double contrast_statistic(const ArmTally& t);

struct ResamplingOptions {
    std::uint64_t n_resamples = 10000;
    std::uint64_t seed = 0;
};

struct BootstrapResult {
    /// Standard deviation of the Gaussian least-squares fit to the histogram.
    double sigma = 0.0;
    /// Plain sample standard deviation of the resampled values.
    double sample_sd = 0.0;
    double fitted_mean = 0.0;
    bool fitted = false;
    std::uint64_t n_valid = 0;
};

/// Stratified bootstrap: each arm is resampled with replacement
/// independently.
BootstrapResult bootstrap(std::span<const ShotRecord> records, const CountStatistic& statistic,
                          const ResamplingOptions& options);
BootstrapResult bootstrap(const ArmTally& tally, const CountStatistic& statistic, const ResamplingOptions& options);
double bootstrap_sigma(std::span<const ShotRecord> records, const CountStatistic& statistic,
                       const ResamplingOptions& options);

/// Each arm keeps its post-selected count n and its removal count; the D1
/// count is redrawn from Binomial(n, n_D1 / n). Returns the sample standard
/// deviation of the statistic.
double monte_carlo_sigma(const ArmTally& tally, const CountStatistic& statistic, const ResamplingOptions& options);
double monte_carlo_sigma(std::span<const ShotRecord> records, const CountStatistic& statistic,
                         const ResamplingOptions& options);

struct GaussianFit {
    double amplitude = 0.0;
    double mean = 0.0;
    double sigma = 0.0;
    bool converged = false;
};

/// Histogram with Freedman-Diaconis bins, then a Levenberg-Marquardt fit of
/// A exp(-(x - mu)^2 / (2 s^2)) to the bin counts.
GaussianFit fit_gaussian_histogram(std::span<const double> values);

// -- per-point summaries ------------------------------------------------------

struct LgPointSummary {
    double wait_us = 0.0;
    EstimateWithError k;
    double sigma_bootstrap = 0.0;
    double sigma_mc = 0.0;
    ContrastEstimate contrast;
    double witness = 0.0;
    double significance = 0.0;
    ArmTally counts{};
};

struct DichotomicPointSummary {
    double wait_us = 0.0;
    CorrelationSet correlators;
    EstimateWithError k;
    double sigma_bootstrap = 0.0;
    double sigma_mc = 0.0;
    double significance = 0.0;
    ArmTally counts{};
};

/// Per-wait resampling seeds: the bootstrap and Monte Carlo routes draw from
/// disjoint streams derived from (seed, wait_index).
ResamplingOptions point_options(const ResamplingOptions& base, std::size_t wait_index, ErrorMethod method);

/// `records` must all share one wait value. Significance uses the bootstrap
/// sigma and is NaN when that sigma is zero.
LgPointSummary summarize_lg_point(std::span<const ShotRecord> records, std::size_t wait_index,
                                  const ResamplingOptions& bootstrap_opts, const ResamplingOptions& mc_opts);
DichotomicPointSummary summarize_dichotomic_point(std::span<const ShotRecord> records, std::size_t wait_index,
                                                  const ResamplingOptions& bootstrap_opts,
                                                  const ResamplingOptions& mc_opts);

/// Splits campaign-ordered records into consecutive runs of equal wait_us.
std::vector<std::span<const ShotRecord>> split_by_wait(std::span<const ShotRecord> records);

}  // namespace lgsim
