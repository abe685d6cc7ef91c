#include "lgsim/qubit.h"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace lgsim {

namespace {

using cplx = std::complex<double>;
using Mat2 = std::array<std::array<cplx, 2>, 2>;

Mat2 rotation_matrix(const Pulse& pulse) {
    const double c = std::cos(pulse.theta() / 2.0);
    const double s = std::sin(pulse.theta() / 2.0);
    const cplx minus_i{0.0, -1.0};
    return {{{cplx{c, 0.0}, minus_i * s * std::polar(1.0, -pulse.phi())},
             {minus_i * s * std::polar(1.0, pulse.phi()), cplx{c, 0.0}}}};
}

Mat2 to_matrix(const QubitState& s) {
    return {{{cplx{s.rho_uu, 0.0}, s.rho_ud}, {std::conj(s.rho_ud), cplx{s.rho_dd, 0.0}}}};
}

void check_wait(double wait_us) {
    if (!(wait_us >= 0.0)) {
        throw std::invalid_argument("wait time must be non-negative, got " + std::to_string(wait_us));
    }
}

}  // namespace

std::string_view to_string(Branch b) noexcept { return b == Branch::Up ? "up" : "down"; }

double QubitState::purity() const noexcept {
    return rho_uu * rho_uu + rho_dd * rho_dd + 2.0 * std::norm(rho_ud);
}

bool QubitState::is_valid(double tol) const noexcept {
    if (!(rho_uu >= -tol) || !(rho_dd >= -tol)) return false;
    if (std::abs(rho_uu + rho_dd - 1.0) > tol) return false;
    return std::norm(rho_ud) <= rho_uu * rho_dd + tol;
}

double wrap_angle(double radians) noexcept {
    double r = std::fmod(radians, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    // fmod of a tiny negative number can round up to exactly 2pi.
    if (r >= kTwoPi) r = 0.0;
    return r;
}

Pulse::Pulse(double theta, double phi) : theta_(wrap_angle(theta)), phi_(wrap_angle(phi)) {}

void CoherenceModel::validate() const {
    if (!(tau_us > 0.0)) {
        throw std::invalid_argument("coherence time must be positive, got " + std::to_string(tau_us));
    }
}

double CoherenceModel::factor(double wait_us) const {
    check_wait(wait_us);
    validate();
    const double x = wait_us / tau_us;
    return shape == CoherenceShape::Exponential ? std::exp(-x) : std::exp(-x * x);
}

std::string_view to_string(CoherenceShape s) noexcept {
    return s == CoherenceShape::Exponential ? "exponential" : "gaussian";
}

CoherenceShape coherence_shape_from_string(std::string_view name) {
    if (name == "exponential") return CoherenceShape::Exponential;
    if (name == "gaussian") return CoherenceShape::Gaussian;
    throw std::invalid_argument("unknown coherence shape '" + std::string(name) + "'");
}

QubitState pure_state(Branch branch) noexcept {
    return branch == Branch::Up ? QubitState{1.0, 0.0, {0.0, 0.0}} : QubitState{0.0, 1.0, {0.0, 0.0}};
}

QubitState apply_rotation(const QubitState& state, const Pulse& pulse) noexcept {
    const Mat2 u = rotation_matrix(pulse);
    const Mat2 rho = to_matrix(state);
    Mat2 tmp{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            tmp[i][j] = u[i][0] * rho[0][j] + u[i][1] * rho[1][j];
    Mat2 out{};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out[i][j] = tmp[i][0] * std::conj(u[j][0]) + tmp[i][1] * std::conj(u[j][1]);
    return {out[0][0].real(), out[1][1].real(), out[0][1]};
}

QubitState apply_dephasing(const QubitState& state, double wait_us, const CoherenceModel& model) {
    QubitState out = state;
    out.rho_ud *= model.factor(wait_us);
    return out;
}

QubitState apply_spin_flip(const QubitState& state, double wait_us, double t1_us) {
    check_wait(wait_us);
    if (!(t1_us > 0.0)) {
        throw std::invalid_argument("T1 must be positive, got " + std::to_string(t1_us));
    }
    if (std::isinf(t1_us)) return state;
    const double p = -std::expm1(-wait_us / t1_us);
    QubitState out;
    out.rho_uu = (1.0 - p) * state.rho_uu + 0.5 * p;
    out.rho_dd = (1.0 - p) * state.rho_dd + 0.5 * p;
    out.rho_ud = (1.0 - p) * state.rho_ud;
    return out;
}

std::pair<Branch, QubitState> measure_projective(const QubitState& state, double rand01) noexcept {
    const Branch b = rand01 < state.rho_uu ? Branch::Up : Branch::Down;
    return {b, pure_state(b)};
}

std::optional<QubitState> negative_measurement(const QubitState& state, Branch intercepted,
                                               double rand01) noexcept {
    const double p_removed = state.population(intercepted);
    if (rand01 < p_removed) return std::nullopt;
    return pure_state(opposite(intercepted));
}

std::pair<double, double> populations(const QubitState& state) noexcept {
    return {state.rho_uu, state.rho_dd};
}

}  // namespace lgsim
