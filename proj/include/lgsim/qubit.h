#pragma once

// Two-level (pseudo-spin-1/2) state and the discrete channels every
// protocol is built from. Up is the +z eigenstate.

#include <complex>
#include <numbers>
#include <optional>
#include <string_view>
#include <utility>

namespace lgsim {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Branch { Up, Down };

constexpr Branch opposite(Branch b) noexcept { return b == Branch::Up ? Branch::Down : Branch::Up; }
std::string_view to_string(Branch b) noexcept;

/// 2x2 density operator. rho_du is the conjugate of rho_ud and is not stored.
struct QubitState {
    double rho_uu = 1.0;
    double rho_dd = 0.0;
    std::complex<double> rho_ud{0.0, 0.0};

    /// Tr(rho^2).
    double purity() const noexcept;
    double population(Branch b) const noexcept { return b == Branch::Up ? rho_uu : rho_dd; }
    /// Trace one and positive semidefinite, both within `tol`.
    bool is_valid(double tol = 1e-12) const noexcept;
};

/// Rotation R(theta, phi) = exp(-i theta/2 (cos(phi) sx + sin(phi) sy)).
/// Angles are wrapped into [0, 2pi) on construction.
class Pulse {
public:
    Pulse(double theta, double phi);

    double theta() const noexcept { return theta_; }
    double phi() const noexcept { return phi_; }

private:
    double theta_;
    double phi_;
};

enum class CoherenceShape { Exponential, Gaussian };

struct CoherenceModel {
    CoherenceShape shape = CoherenceShape::Exponential;
    double tau_us = 130.0;

    /// Throws std::invalid_argument unless tau_us > 0.
    void validate() const;
    /// Coherence factor c(t) in [0, 1]; c(0) = 1, c(inf) = 0.
    double factor(double wait_us) const;
};

std::string_view to_string(CoherenceShape s) noexcept;
CoherenceShape coherence_shape_from_string(std::string_view name);

/// Wraps an angle into [0, 2pi).
double wrap_angle(double radians) noexcept;

QubitState pure_state(Branch branch) noexcept;

QubitState apply_rotation(const QubitState& state, const Pulse& pulse) noexcept;

/// Scales the coherence by c(wait); populations are untouched.
/// Throws std::invalid_argument for a negative or NaN wait.
QubitState apply_dephasing(const QubitState& state, double wait_us, const CoherenceModel& model);

/// Symmetric flips toward the equal mixture with probability
/// p = 1 - exp(-wait/T1). T1 = +inf disables the channel.
/// Throws std::invalid_argument for non-positive T1 or negative wait.
QubitState apply_spin_flip(const QubitState& state, double wait_us, double t1_us);

/// Lüders projective measurement in the z basis. Up iff rand01 < rho_uu.
std::pair<Branch, QubitState> measure_projective(const QubitState& state, double rand01) noexcept;

/// Ideal negative measurement: the intercepted branch is removed.
/// Returns std::nullopt (the particle was removed) with probability equal to
/// the intercepted population; otherwise the state collapsed onto the other
/// branch.
std::optional<QubitState> negative_measurement(const QubitState& state, Branch intercepted,
                                               double rand01) noexcept;

std::pair<double, double> populations(const QubitState& state) noexcept;

}  // namespace lgsim
