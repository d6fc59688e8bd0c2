#pragma once

// Lossy three-wave coupled-mode equations at phase matching, and the closed
// form efficiency models they reduce to.
//
// Wave 1 (signal) splits into wave 2 (pump) and wave 3 (converted):
//
//   da1/dz = -i k a2 a3   - (alpha1/2) a1
//   da2/dz = -i k a1 a3*  - (alpha2/2) a2
//   da3/dz = -i k a1 a2*  - (alpha3/2) a3
//
// Amplitudes are photon fluxes expressed in pump-photon-equivalent watts,
// |a_i|^2 = N_i * hbar * omega_2, which makes |a2|^2 the pump power and the
// coupling k = sqrt(eta_nor): the local conversion rate is
// g(z) = sqrt(eta_nor * P2(z)), and the lossless, undepleted solution is
// exactly sin^2(sqrt(eta_nor P2) L).

#include "qfcsim/core.hpp"
#include "qfcsim/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

namespace qfcsim {

struct CmeParams {
    double eta_nor = 0.0;  // W^-1 cm^-2
    LossSet losses;
    double length_cm = 2.0;
    double signal_power_w = 1e-9;
    double pump_power_w = 0.0;
    WavelengthTriple wavelengths;

    void validate() const {
        detail::require(std::isfinite(eta_nor) && eta_nor >= 0.0, "eta_nor must be >= 0");
        detail::require(length_cm > 0.0, "length_cm must be > 0");
        detail::require(signal_power_w >= 0.0 && pump_power_w >= 0.0, "powers must be >= 0");
        detail::require(passes_energy_gate(wavelengths),
                        "wavelength triple violates energy conservation");
    }
};

struct CmeState {
    double z_cm = 0.0;
    std::complex<double> a1, a2, a3;

    double flux1() const { return std::norm(a1); }
    double flux2() const { return std::norm(a2); }
    double flux3() const { return std::norm(a3); }
};

struct CmeSolution {
    std::vector<CmeState> trajectory;
    int steps = 0;
    int refinements = 0;
    /// Largest relative endpoint change between successive refinements.
    std::vector<double> endpoint_deltas;
    /// Signal flux at z = 0 and pump-off transmitted signal flux at z = L.
    double signal_in_flux = 0.0;
    double signal_reference_flux = 0.0;

    const CmeState& end() const { return trajectory.back(); }

    /// Output-referenced internal efficiency N3(L) / (N1(0) e^{-alpha1 L}).
    double eta_int() const {
        return signal_reference_flux > 0.0 ? end().flux3() / signal_reference_flux : 0.0;
    }
};

/// Thrown when step halving does not settle; carries the last two endpoints
/// as photon fluxes (N1, N2, N3).
class IntegrationFailure : public ConvergenceError {
public:
    IntegrationFailure(const std::string& what, std::array<double, 3> previous,
                       std::array<double, 3> last)
        : ConvergenceError(what), previous_(previous), last_(last) {}
    const std::array<double, 3>& previous() const noexcept { return previous_; }
    const std::array<double, 3>& last() const noexcept { return last_; }

private:
    std::array<double, 3> previous_;
    std::array<double, 3> last_;
};

namespace detail {

struct Amplitudes {
    std::complex<double> a1, a2, a3;

    Amplitudes operator+(const Amplitudes& o) const { return {a1 + o.a1, a2 + o.a2, a3 + o.a3}; }
    Amplitudes operator*(double s) const { return {a1 * s, a2 * s, a3 * s}; }
};

inline Amplitudes cme_rhs(const Amplitudes& a, double kappa, const LossSet& loss) {
    constexpr std::complex<double> minus_i{0.0, -1.0};
    return {minus_i * kappa * a.a2 * a.a3 - 0.5 * loss.alpha1() * a.a1,
            minus_i * kappa * a.a1 * std::conj(a.a3) - 0.5 * loss.alpha2() * a.a2,
            minus_i * kappa * a.a1 * std::conj(a.a2) - 0.5 * loss.alpha3() * a.a3};
}

/// Classical fourth-order Runge-Kutta over [0, L] with a fixed step count.
/// Returns the end state; fills `trajectory` when given.
inline CmeState rk4_run(const Amplitudes& start, double kappa, const LossSet& loss, double length,
                        int steps, std::vector<CmeState>* trajectory = nullptr) {
    const double h = length / steps;
    Amplitudes y = start;
    if (trajectory) {
        trajectory->clear();
        trajectory->reserve(static_cast<std::size_t>(steps) + 1);
        trajectory->push_back({0.0, y.a1, y.a2, y.a3});
    }
    for (int n = 0; n < steps; ++n) {
        const Amplitudes k1 = cme_rhs(y, kappa, loss);
        const Amplitudes k2 = cme_rhs(y + k1 * (0.5 * h), kappa, loss);
        const Amplitudes k3 = cme_rhs(y + k2 * (0.5 * h), kappa, loss);
        const Amplitudes k4 = cme_rhs(y + k3 * h, kappa, loss);
        y = y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        if (trajectory) trajectory->push_back({length * (n + 1) / steps, y.a1, y.a2, y.a3});
    }
    return {length, y.a1, y.a2, y.a3};
}

}  // namespace detail

constexpr double cme_convergence_tol = 1e-8;
constexpr int cme_max_refinements = 20;

/// Integrates with step halving until every endpoint flux moves by less than
/// 1e-8 relative to its own scale (signal flux for waves 1 and 3, pump flux
/// for wave 2) between refinements and the signal plus idler photon flux
/// stays above its loss-limited floor.
inline CmeSolution integrate_cme(const CmeParams& params, int num_steps_hint = 64) {
    params.validate();
    detail::require(num_steps_hint >= 1, "num_steps_hint must be >= 1");
    const auto& w = params.wavelengths;
    const double n1 = params.signal_power_w * w.signal_nm / w.pump_nm;
    const double n2 = params.pump_power_w;
    const detail::Amplitudes start{std::sqrt(n1), std::sqrt(n2), 0.0};
    const double kappa = std::sqrt(params.eta_nor);

    auto fluxes = [](const CmeState& s) {
        return std::array<double, 3>{s.flux1(), s.flux2(), s.flux3()};
    };
    auto rel_delta = [&](const std::array<double, 3>& a, const std::array<double, 3>& b) {
        const std::array<double, 3> ref{n1, n2, n1};
        double worst = 0.0;
        for (int i = 0; i < 3; ++i) {
            // a blown-up coarse solution must never count as converged
            if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
                return std::numeric_limits<double>::infinity();
            const double scale = std::max({std::abs(a[i]), std::abs(b[i]), ref[i]});
            if (scale > 0.0) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
        }
        return worst;
    };

    // Coupling cancels in d(n1 + n3)/dz, so n1 + n3 can decay no faster than
    // the larger of the two signal losses. Overdamped RK4 iterates break this.
    const double alpha_max = std::max(params.losses.alpha1(), params.losses.alpha3());
    const double photon_floor = n1 * std::exp(-alpha_max * params.length_cm) * (1.0 - 1e-6);
    auto physical = [&](const std::array<double, 3>& f) { return f[0] + f[2] >= photon_floor; };

    CmeSolution sol;
    sol.signal_in_flux = n1;
    sol.signal_reference_flux = n1 * std::exp(-params.losses.alpha1() * params.length_cm);

    int steps = num_steps_hint;
    auto prev = fluxes(detail::rk4_run(start, kappa, params.losses, params.length_cm, steps));
    for (int r = 1; r <= cme_max_refinements; ++r) {
        steps *= 2;
        const auto next = fluxes(detail::rk4_run(start, kappa, params.losses, params.length_cm, steps));
        const double delta = rel_delta(prev, next);
        sol.endpoint_deltas.push_back(delta);
        if (delta < cme_convergence_tol && physical(next)) {
            detail::rk4_run(start, kappa, params.losses, params.length_cm, steps, &sol.trajectory);
            sol.steps = steps;
            sol.refinements = r;
            return sol;
        }
        if (r == cme_max_refinements)
            throw IntegrationFailure("coupled-mode integration did not converge after " +
                                         std::to_string(cme_max_refinements) + " refinements",
                                     prev, next);
        prev = next;
    }
    throw IntegrationFailure("coupled-mode integration did not converge", prev, prev);
}

struct EfficiencyPoint {
    double pump_power_w = 0.0;
    double eta_int = 0.0;
};

inline std::vector<EfficiencyPoint> internal_efficiency_curve(const CmeParams& params,
                                                              const std::vector<double>& pump_powers_w,
                                                              int num_steps_hint = 64) {
    detail::require(params.signal_power_w > 0.0, "signal power must be > 0");
    std::vector<EfficiencyPoint> out;
    out.reserve(pump_powers_w.size());
    for (double p : pump_powers_w) {
        detail::require(p >= 0.0, "pump powers must be >= 0");
        CmeParams local = params;
        local.pump_power_w = p;
        out.push_back({p, integrate_cme(local, num_steps_hint).eta_int()});
    }
    return out;
}

/// Lossless undepleted-pump efficiency sin^2(sqrt(eta_nor P2) L).
inline double eta_sin2(double eta_nor, double p2_w, double length_cm) {
    detail::require(eta_nor >= 0.0 && p2_w >= 0.0 && length_cm >= 0.0,
                    "eta_sin2 arguments must be >= 0");
    const double s = std::sin(std::sqrt(eta_nor * p2_w) * length_cm);
    return s * s;
}

/// Loss gain factor (e^{dA L} - 1)^2 / dA^2 of the low-conversion model;
/// tends to L^2 as dA -> 0.
inline double low_conversion_gain(const LossSet& losses, double length_cm) {
    const double da = losses.delta_alpha();
    if (std::abs(da) * length_cm < 1e-8) return length_cm * length_cm;
    const double e = std::expm1(da * length_cm);
    return e * e / (da * da);
}

/// eta_nor * P2_out * (e^{dA L} - 1)^2 / dA^2 with dA = (a1 + a2 - a3)/2.
inline double eta_low_conversion_lossy(double eta_nor, double p2_out_w, const LossSet& losses,
                                       double length_cm) {
    detail::require(eta_nor >= 0.0 && p2_out_w >= 0.0 && length_cm >= 0.0,
                    "low-conversion arguments must be >= 0");
    return eta_nor * p2_out_w * low_conversion_gain(losses, length_cm);
}

}  // namespace qfcsim
