#include "lgsim/estimators.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>

#include <Eigen/Dense>
#include <boost/math/special_functions/beta.hpp>

#include "lgsim/random.h"

namespace lgsim {

namespace {

constexpr std::uint64_t kMinResamples = 100;

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

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile_sorted(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Spacing of the lattice the values live on, or 0 if they do not sit on one.
// Resampled proportions are multiples of 1/n; bins that straddle a varying
// number of lattice points would make the histogram comb-shaped.
double lattice_spacing(std::span<const double> sorted) {
    std::vector<double> uniq;
    for (double x : sorted) {
        if (uniq.empty() || x != uniq.back()) uniq.push_back(x);
    }
    if (uniq.size() < 3) return 0.0;
    double gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < uniq.size(); ++i) gap = std::min(gap, uniq[i] - uniq[i - 1]);
    const double scale = std::max(std::abs(uniq.front()), std::abs(uniq.back()));
    if (!(gap > 1e-12 * std::max(scale, 1.0))) return 0.0;
    for (std::size_t i = 1; i < uniq.size(); ++i) {
        const double ratio = (uniq[i] - uniq[i - 1]) / gap;
        if (std::abs(ratio - std::round(ratio)) > 1e-6) return 0.0;
    }
    return gap;
}

ArmCounts multinomial_resample(const ArmCounts& c, CounterRng& rng) {
    const std::uint64_t n = c.total();
    if (n == 0) return c;
    ArmCounts out;
    const double p1 = static_cast<double>(c.d1) / static_cast<double>(n);
    out.d1 = std::binomial_distribution<std::uint64_t>(n, p1)(rng);
    const std::uint64_t rest = n - out.d1;
    const std::uint64_t rest_src = c.d2 + c.removed;
    if (rest > 0 && rest_src > 0) {
        const double p2 = static_cast<double>(c.d2) / static_cast<double>(rest_src);
        out.d2 = std::binomial_distribution<std::uint64_t>(rest, p2)(rng);
    }
    out.removed = rest - out.d2;
    return out;
}

ArmCounts binomial_redraw(const ArmCounts& c, CounterRng& rng) {
    const std::uint64_t n = c.post_selected();
    if (n == 0) return c;
    ArmCounts out = c;
    const double p = static_cast<double>(c.d1) / static_cast<double>(n);
    out.d1 = std::binomial_distribution<std::uint64_t>(n, p)(rng);
    out.d2 = n - out.d1;
    return out;
}

template <typename Redraw>
std::vector<double> resample(const ArmTally& tally, const CountStatistic& statistic, const ResamplingOptions& opts,
                             Redraw redraw) {
    require(opts.n_resamples >= kMinResamples,
            [&] { return "n_resamples must be at least " + std::to_string(kMinResamples); });
    std::vector<double> values;
    values.reserve(opts.n_resamples);
    for (std::uint64_t r = 0; r < opts.n_resamples; ++r) {
        CounterRng rng(StreamSeed{opts.seed, r});
        ArmTally t{};
        for (std::size_t a = 0; a < kArmCount; ++a) t[a] = redraw(tally[a], rng);
        try {
            values.push_back(statistic(t));
        } catch (const EmptySelectionError&) {
        }
    }
    return values;
}

ArmCounts merged_intercepts(const ArmTally& t) {
    ArmCounts with = counts(t, Arm::InterceptUp);
    with += counts(t, Arm::InterceptDown);
    return with;
}

}  // namespace

std::string_view to_string(ErrorMethod m) noexcept {
    switch (m) {
        case ErrorMethod::Bootstrap: return "bootstrap";
        case ErrorMethod::MonteCarloCP: return "monte_carlo_cp";
        case ErrorMethod::Exact: return "exact";
    }
    return "?";
}

ArmCounts count_outcomes(std::span<const ShotRecord> records) {
    ArmCounts c;
    for (const auto& r : records) {
        switch (r.outcome) {
            case ShotOutcome::D1: ++c.d1; break;
            case ShotOutcome::D2: ++c.d2; break;
            case ShotOutcome::Removed: ++c.removed; break;
        }
    }
    return c;
}

ArmTally tally_by_arm(std::span<const ShotRecord> records) {
    ArmTally t{};
    for (const auto& r : records) t[static_cast<std::size_t>(r.arm)] += count_outcomes({&r, 1});
    return t;
}

EstimateWithError mean_q3(const ArmCounts& c) {
    const std::uint64_t n = c.post_selected();
    if (n == 0) throw EmptySelectionError("no post-selected shots to average");
    const double m = (static_cast<double>(c.d1) - static_cast<double>(c.d2)) / static_cast<double>(n);
    return {m, std::sqrt(std::max(0.0, 1.0 - m * m) / static_cast<double>(n)), ErrorMethod::Exact, n};
}

EstimateWithError mean_q3(std::span<const ShotRecord> records) { return mean_q3(count_outcomes(records)); }

EstimateWithError estimate_K_simplified(const ArmTally& tally) {
    const auto without = mean_q3(counts(tally, Arm::WithoutQ2));
    const auto with = mean_q3(merged_intercepts(tally));
    return {1.0 + with.value - without.value, std::hypot(with.sigma, without.sigma), ErrorMethod::Exact,
            with.n_shots_used + without.n_shots_used};
}

EstimateWithError estimate_K_simplified(std::span<const ShotRecord> without_q2,
                                        std::span<const ShotRecord> intercept_up,
                                        std::span<const ShotRecord> intercept_down) {
    ArmTally t{};
    t[static_cast<std::size_t>(Arm::WithoutQ2)] = count_outcomes(without_q2);
    t[static_cast<std::size_t>(Arm::InterceptUp)] = count_outcomes(intercept_up);
    t[static_cast<std::size_t>(Arm::InterceptDown)] = count_outcomes(intercept_down);
    return estimate_K_simplified(t);
}

CorrelationSet dichotomic_correlations(const ArmTally& tally) {
    const auto& up = counts(tally, Arm::InterceptUp);
    const auto& down = counts(tally, Arm::InterceptDown);
    // Product Q3*Q2 as a +/-1 count: Q2 = -1 after an Up interception.
    const ArmCounts q3q2{down.d1 + up.d2, down.d2 + up.d1, down.removed + up.removed};
    return {mean_q3(counts(tally, Arm::EarlyReadout)), mean_q3(q3q2), mean_q3(counts(tally, Arm::WithoutQ2))};
}

EstimateWithError estimate_K_dichotomic(const CorrelationSet& c) {
    for (const auto* e : {&c.q2q1, &c.q3q2, &c.q3q1}) {
        require(e->value >= -1.0 && e->value <= 1.0, "correlator outside [-1, 1]");
        require(e->n_shots_used >= 1, "correlator built from zero shots");
        require(e->sigma >= 0.0, "negative correlator sigma");
    }
    const double sigma = std::sqrt(c.q2q1.sigma * c.q2q1.sigma + c.q3q2.sigma * c.q3q2.sigma +
                                   c.q3q1.sigma * c.q3q1.sigma);
    return {c.q2q1.value + c.q3q2.value - c.q3q1.value, sigma, ErrorMethod::Exact,
            c.q2q1.n_shots_used + c.q3q2.n_shots_used + c.q3q1.n_shots_used};
}

ContrastEstimate estimate_contrast(const ArmCounts& c) {
    const std::uint64_t n = c.post_selected();
    if (n == 0) throw EmptySelectionError("no post-selected shots for the contrast");
    const double p_up = static_cast<double>(c.d1) / static_cast<double>(n);
    const double raw = 1.0 - 2.0 * p_up;
    ContrastEstimate out;
    out.estimate = {std::clamp(raw, 0.0, 1.0), 2.0 * std::sqrt(p_up * (1.0 - p_up) / static_cast<double>(n)),
                    ErrorMethod::Exact, n};
    out.clamped = raw < 0.0 || raw > 1.0;
    return out;
}

ContrastEstimate estimate_contrast(std::span<const ShotRecord> records) {
    return estimate_contrast(count_outcomes(records));
}

double quantum_witness(double k) noexcept { return std::abs(k - 1.0); }

double violation_significance(const EstimateWithError& k) {
    require(k.sigma > 0.0, "violation significance needs a positive sigma");
    return (k.value - 1.0) / k.sigma;
}

std::pair<double, double> clopper_pearson(std::uint64_t successes, std::uint64_t trials, double confidence) {
    require(trials >= 1, "clopper_pearson needs at least one trial");
    require(successes <= trials, "successes exceed trials");
    require(confidence > 0.0 && confidence < 1.0, "confidence must lie in (0, 1)");
    const double tail = 0.5 * (1.0 - confidence);
    const auto k = static_cast<double>(successes);
    const auto n = static_cast<double>(trials);
    const double lo = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, tail);
    const double hi = successes == trials ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - tail);
    return {lo, hi};
}

double k_simplified_statistic(const ArmTally& t) { return estimate_K_simplified(t).value; }

double k_dichotomic_statistic(const ArmTally& t) { return estimate_K_dichotomic(dichotomic_correlations(t)).value; }

double contrast_statistic(const ArmTally& t) { return estimate_contrast(counts(t, Arm::WithoutQ2)).estimate.value; }

GaussianFit fit_gaussian_histogram(std::span<const double> values) {
    GaussianFit fit;
    if (values.size() < 3) return fit;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double range = sorted.back() - sorted.front();
    const double sd = sample_sd(sorted);
    if (!(range > 0.0) || !(sd > 0.0)) return fit;

    const double n = static_cast<double>(sorted.size());
    const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
    double width = iqr > 0.0 ? 2.0 * iqr / std::cbrt(n) : 3.49 * sd / std::cbrt(n);
    double origin = sorted.front();
    if (const double grid = lattice_spacing(sorted); grid > 0.0) {
        width = std::max(1.0, std::round(width / grid)) * grid;
        origin -= 0.5 * grid;
    }
    const auto nbins = static_cast<std::size_t>(
        std::clamp(std::ceil((sorted.back() - origin) / width + 1e-9), 1.0, 4096.0));
    if (nbins < 3) return fit;
    width = std::max(width, (sorted.back() - origin) / static_cast<double>(nbins) * (1.0 + 1e-12));

    std::vector<double> x(nbins), y(nbins, 0.0);
    for (std::size_t i = 0; i < nbins; ++i) x[i] = origin + (static_cast<double>(i) + 0.5) * width;
    for (double v : sorted) {
        const auto i = std::min(nbins - 1, static_cast<std::size_t>((v - origin) / width));
        y[i] += 1.0;
    }

    const double mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / n;
    Eigen::Vector3d p(*std::max_element(y.begin(), y.end()), mean, sd);
    auto cost = [&](const Eigen::Vector3d& q) {
        double c = 0.0;
        for (std::size_t i = 0; i < nbins; ++i) {
            const double z = (x[i] - q[1]) / q[2];
            const double r = y[i] - q[0] * std::exp(-0.5 * z * z);
            c += r * r;
        }
        return c;
    };

    double lambda = 1e-3;
    double current = cost(p);
    for (int iter = 0; iter < 200; ++iter) {
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        for (std::size_t i = 0; i < nbins; ++i) {
            const double z = (x[i] - p[1]) / p[2];
            const double e = std::exp(-0.5 * z * z);
            const Eigen::Vector3d j(e, p[0] * e * z / p[2], p[0] * e * z * z / p[2]);
            jtj += j * j.transpose();
            jtr += j * (y[i] - p[0] * e);
        }
        Eigen::Matrix3d damped = jtj;
        damped.diagonal() *= (1.0 + lambda);
        const Eigen::Vector3d step = damped.ldlt().solve(jtr);
        const Eigen::Vector3d trial = p + step;
        const double trial_cost = trial[2] != 0.0 ? cost(trial) : std::numeric_limits<double>::infinity();
        if (trial_cost < current) {
            const bool small = step.cwiseAbs().maxCoeff() <= 1e-10 * (p.cwiseAbs().maxCoeff() + 1e-300) ||
                               (current - trial_cost) <= 1e-14 * current;
            p = trial;
            current = trial_cost;
            lambda = std::max(lambda / 10.0, 1e-12);
            if (small) {
                fit.converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if (lambda > 1e12) {
                fit.converged = true;  // no further descent possible from here
                break;
            }
        }
    }
    fit.amplitude = p[0];
    fit.mean = p[1];
    fit.sigma = std::abs(p[2]);
    if (!std::isfinite(fit.sigma) || fit.sigma <= 0.0) fit.converged = false;
    return fit;
}

BootstrapResult bootstrap(const ArmTally& tally, const CountStatistic& statistic, const ResamplingOptions& options) {
    const auto values = resample(tally, statistic, options, multinomial_resample);
    BootstrapResult out;
    out.n_valid = values.size();
    out.sample_sd = sample_sd(values);
    if (values.empty()) return out;
    out.fitted_mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (out.sample_sd == 0.0) return out;
    const GaussianFit fit = fit_gaussian_histogram(values);
    if (fit.converged) {
        out.sigma = fit.sigma;
        out.fitted_mean = fit.mean;
        out.fitted = true;
    } else {
        out.sigma = out.sample_sd;
    }
    return out;
}

BootstrapResult bootstrap(std::span<const ShotRecord> records, const CountStatistic& statistic,
                          const ResamplingOptions& options) {
    return bootstrap(tally_by_arm(records), statistic, options);
}

double bootstrap_sigma(std::span<const ShotRecord> records, const CountStatistic& statistic,
                       const ResamplingOptions& options) {
    return bootstrap(records, statistic, options).sigma;
}

double monte_carlo_sigma(const ArmTally& tally, const CountStatistic& statistic, const ResamplingOptions& options) {
    return sample_sd(resample(tally, statistic, options, binomial_redraw));
}

double monte_carlo_sigma(std::span<const ShotRecord> records, const CountStatistic& statistic,
                         const ResamplingOptions& options) {
    return monte_carlo_sigma(tally_by_arm(records), statistic, options);
}

ResamplingOptions point_options(const ResamplingOptions& base, std::size_t wait_index, ErrorMethod method) {
    const std::uint64_t tag = method == ErrorMethod::Bootstrap ? 0x426f6f74ULL : 0x4d43ULL;
    return {base.n_resamples, mix64(base.seed ^ mix64(tag + 0x10000ULL * wait_index))};
}

LgPointSummary summarize_lg_point(std::span<const ShotRecord> records, std::size_t wait_index,
                                  const ResamplingOptions& bootstrap_opts, const ResamplingOptions& mc_opts) {
    require(!records.empty(), "no records for this wait point");
    LgPointSummary s;
    s.wait_us = records.front().wait_us;
    s.counts = tally_by_arm(records);
    s.k = estimate_K_simplified(s.counts);
    s.sigma_bootstrap =
        bootstrap(s.counts, k_simplified_statistic, point_options(bootstrap_opts, wait_index, ErrorMethod::Bootstrap))
            .sigma;
    s.sigma_mc =
        monte_carlo_sigma(s.counts, k_simplified_statistic, point_options(mc_opts, wait_index, ErrorMethod::MonteCarloCP));
    s.k.sigma = s.sigma_bootstrap;
    s.k.method = ErrorMethod::Bootstrap;
    s.contrast = estimate_contrast(counts(s.counts, Arm::WithoutQ2));
    s.witness = quantum_witness(s.k.value);
    s.significance = s.sigma_bootstrap > 0.0 ? violation_significance(s.k) : std::numeric_limits<double>::quiet_NaN();
    return s;
}

DichotomicPointSummary summarize_dichotomic_point(std::span<const ShotRecord> records, std::size_t wait_index,
                                                  const ResamplingOptions& bootstrap_opts,
                                                  const ResamplingOptions& mc_opts) {
    require(!records.empty(), "no records for this wait point");
    DichotomicPointSummary s;
    s.wait_us = records.front().wait_us;
    s.counts = tally_by_arm(records);
    s.correlators = dichotomic_correlations(s.counts);
    s.k = estimate_K_dichotomic(s.correlators);
    s.sigma_bootstrap = bootstrap(s.counts, k_dichotomic_statistic,
                                  point_options(bootstrap_opts, wait_index, ErrorMethod::Bootstrap))
                            .sigma;
    s.sigma_mc = monte_carlo_sigma(s.counts, k_dichotomic_statistic,
                                   point_options(mc_opts, wait_index, ErrorMethod::MonteCarloCP));
    s.k.sigma = s.sigma_bootstrap;
    s.k.method = ErrorMethod::Bootstrap;
    s.significance = s.sigma_bootstrap > 0.0 ? violation_significance(s.k) : std::numeric_limits<double>::quiet_NaN();
    return s;
}

std::vector<std::span<const ShotRecord>> split_by_wait(std::span<const ShotRecord> records) {
    std::vector<std::span<const ShotRecord>> groups;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= records.size(); ++i) {
        if (i == records.size() || records[i].wait_us != records[start].wait_us) {
            groups.push_back(records.subspan(start, i - start));
            start = i;
        }
    }
    return groups;
}

}  // namespace lgsim
