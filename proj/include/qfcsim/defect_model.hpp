#pragma once

// Defect-perturbed QPM grating and its Fourier response.
//
// The nonlinear coefficient is d(z) = d_eff sin(2 pi z / Lambda) exp(i Phi(z)),
// where Phi(z) steps by phi_j = (2 pi / Lambda)(w_j - Lambda/2) at every defect
// start x_j. Conversion efficiency at grating frequency q is proportional to
// |A(q)|^2 with A(q) = int_0^L d(z) exp(-i 2 pi q z) dz.
//
// Between defects the phase is constant, so each segment integrates in closed
// form after writing the sine as two exponentials. All lengths inside this
// module are in um, q in um^-1, amplitudes in units of d_eff * um.

#include "qfcsim/core.hpp"
#include "qfcsim/errors.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <utility>
#include <vector>

namespace qfcsim {

struct Defect {
    double position_um = 0.0;
    double width_um = 0.0;

    friend bool operator==(const Defect&, const Defect&) = default;
};

/// Ordered defect list. The x0 = 0 reference term carries only a global
/// phase and is never stored.
class DefectMap {
public:
    DefectMap() = default;

    explicit DefectMap(std::vector<Defect> defects) : defects_(std::move(defects)) {
        for (std::size_t i = 0; i < defects_.size(); ++i) {
            const auto& d = defects_[i];
            detail::require(std::isfinite(d.position_um) && d.position_um >= 0.0,
                            "defect position must be >= 0");
            detail::require(std::isfinite(d.width_um) && d.width_um >= 0.0,
                            "defect width must be >= 0");
            if (i > 0)
                detail::require(d.position_um > defects_[i - 1].position_um,
                                "defect positions must be strictly increasing");
        }
    }

    std::size_t size() const noexcept { return defects_.size(); }
    bool empty() const noexcept { return defects_.empty(); }
    const Defect& operator[](std::size_t i) const { return defects_[i]; }
    auto begin() const noexcept { return defects_.begin(); }
    auto end() const noexcept { return defects_.end(); }
    const std::vector<Defect>& defects() const noexcept { return defects_; }

    void check_within(const WaveguideSpec& spec) const {
        if (!defects_.empty())
            detail::require(defects_.back().position_um <= spec.length_um(),
                            "defect position beyond the waveguide end");
    }

    friend bool operator==(const DefectMap&, const DefectMap&) = default;

private:
    std::vector<Defect> defects_;
};

/// Phase step of a defect of width w, reduced to (-pi, pi].
inline double phase_shift(double width_um, double poling_period_um) {
    detail::require(poling_period_um > 0.0, "poling period must be > 0");
    detail::require(width_um >= 0.0, "defect width must be >= 0");
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double phi = std::remainder(two_pi * (width_um / poling_period_um - 0.5), two_pi);
    if (phi <= -std::numbers::pi) phi += two_pi;
    return phi;
}

struct PhaseBreakpoint {
    double z_um = 0.0;
    double cumulative_phase_rad = 0.0;
};

/// Piecewise-constant cumulative phase; first breakpoint is (0, 0).
inline std::vector<PhaseBreakpoint> phase_profile(const WaveguideSpec& spec,
                                                  const DefectMap& defects) {
    std::vector<PhaseBreakpoint> out;
    out.reserve(defects.size() + 1);
    out.push_back({0.0, 0.0});
    double phase = 0.0;
    for (const auto& d : defects) {
        phase += phase_shift(d.width_um, spec.poling_period_um());
        if (d.position_um == 0.0)
            out.front().cumulative_phase_rad = phase;
        else
            out.push_back({d.position_um, phase});
    }
    return out;
}

namespace detail {

/// int_a^b exp(i beta z) dz, written around the midpoint so beta -> 0 is exact.
inline std::complex<double> exp_integral(double beta, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    const double x = beta * half;
    const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
    const double mag = 2.0 * half * sinc;
    return {mag * std::cos(beta * mid), mag * std::sin(beta * mid)};
}

inline std::complex<double> amplitude_um(const WaveguideSpec& spec,
                                         const std::vector<PhaseBreakpoint>& profile, double q,
                                         double z_end_um) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double k = two_pi / spec.poling_period_um();
    const double beta_co = k - two_pi * q;
    const double beta_counter = -(k + two_pi * q);
    // sin(kz) = (e^{ikz} - e^{-ikz}) / 2i
    const std::complex<double> prefactor{0.0, -0.5 * spec.d_eff()};

    std::complex<double> total{0.0, 0.0};
    for (std::size_t s = 0; s < profile.size(); ++s) {
        const double a = profile[s].z_um;
        if (a >= z_end_um) break;
        const double b = s + 1 < profile.size() ? std::min(profile[s + 1].z_um, z_end_um) : z_end_um;
        if (b <= a) continue;
        const double phi = profile[s].cumulative_phase_rad;
        const std::complex<double> seg =
            exp_integral(beta_co, a, b) - exp_integral(beta_counter, a, b);
        total += std::complex<double>{std::cos(phi), std::sin(phi)} * seg;
    }
    return prefactor * total;
}

}  // namespace detail

/// A(q, z_end) = int_0^z_end d(z) exp(-i 2 pi q z) dz, in d_eff * um.
inline std::complex<double> amplitude_integral(const WaveguideSpec& spec, const DefectMap& defects,
                                               double q_per_um, double z_end_cm) {
    detail::require(q_per_um > 0.0, "grating frequency q must be > 0");
    detail::require(z_end_cm >= 0.0 && z_end_cm <= spec.length_cm() * (1.0 + 1e-12),
                    "z_end must lie in [0, L]");
    defects.check_within(spec);
    const double z_end_um = std::min(units::cm_to_um(z_end_cm), spec.length_um());
    return detail::amplitude_um(spec, phase_profile(spec, defects), q_per_um, z_end_um);
}

/// Location and height of the defect-free efficiency peak; every relative
/// efficiency in this module is normalized by `peak_power`.
struct IdealReference {
    double q_peak = 0.0;
    double peak_power = 0.0;  // |A_ideal(q_peak, L)|^2
};

inline IdealReference ideal_reference(const WaveguideSpec& spec) {
    const std::vector<PhaseBreakpoint> flat{{0.0, 0.0}};
    const double L = spec.length_um();
    const double q0 = spec.nominal_q();
    // searched in u = (q - q0) L so Brent's relative tolerance resolves the lobe
    auto neg_power = [&](double u) {
        return -std::norm(detail::amplitude_um(spec, flat, q0 + u / L, L));
    };
    const auto [u, v] = boost::math::tools::brent_find_minima(
        neg_power, -1.0, 1.0, std::numeric_limits<double>::digits / 2);
    return {q0 + u / L, -v};
}

struct TuningCurve {
    std::vector<double> q_values;
    std::vector<double> relative_eta;
};

inline TuningCurve tuning_curve(const WaveguideSpec& spec, const DefectMap& defects, double q_min,
                                double q_max, int num_points) {
    detail::require(q_min < q_max, "q_min must be < q_max");
    detail::require(q_min > 0.0, "q_min must be > 0");
    detail::require(num_points >= 2, "num_points must be >= 2");
    defects.check_within(spec);
    const auto ref = ideal_reference(spec);
    const auto profile = phase_profile(spec, defects);
    TuningCurve curve;
    curve.q_values.resize(num_points);
    curve.relative_eta.resize(num_points);
    for (int i = 0; i < num_points; ++i) {
        const double q = q_min + (q_max - q_min) * i / (num_points - 1);
        curve.q_values[i] = q;
        curve.relative_eta[i] =
            std::norm(detail::amplitude_um(spec, profile, q, spec.length_um())) / ref.peak_power;
    }
    return curve;
}

/// Summary of a tuning curve: peak location/height and FWHM of the main lobe
/// (linear interpolation of the half-maximum crossings; 0 when a crossing
/// lies outside the sampled range).
struct CurveSummary {
    double peak_q = 0.0;
    double peak_value = 0.0;
    double fwhm = 0.0;
};

inline CurveSummary summarize(const TuningCurve& curve) {
    const auto& q = curve.q_values;
    const auto& y = curve.relative_eta;
    detail::require(q.size() == y.size() && q.size() >= 2, "malformed tuning curve");
    const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
    CurveSummary s{q[imax], y[imax], 0.0};
    const double half = 0.5 * y[imax];
    std::size_t lo = imax;
    while (lo > 0 && y[lo - 1] >= half) --lo;
    std::size_t hi = imax;
    while (hi + 1 < y.size() && y[hi + 1] >= half) ++hi;
    if (lo == 0 || hi + 1 == y.size()) return s;
    auto cross = [&](std::size_t below, std::size_t above) {
        const double t = (half - y[below]) / (y[above] - y[below]);
        return q[below] + t * (q[above] - q[below]);
    };
    s.fwhm = cross(hi + 1, hi) - cross(lo - 1, lo);
    return s;
}

struct EvolutionSample {
    double z_cm = 0.0;
    double relative_eta = 0.0;
};

/// Relative efficiency |A(q, z)|^2 / |A_ideal(q_peak, L)|^2 along the guide.
/// Defect positions are inserted into the uniform grid so the jumps are
/// resolved; the last sample is always z = L.
inline std::vector<EvolutionSample> efficiency_evolution(const WaveguideSpec& spec,
                                                         const DefectMap& defects, double q,
                                                         int num_points) {
    detail::require(num_points >= 2, "num_points must be >= 2");
    detail::require(q > 0.0, "grating frequency q must be > 0");
    defects.check_within(spec);
    const double L = spec.length_um();
    std::vector<double> zs;
    zs.reserve(num_points + defects.size());
    for (int i = 0; i < num_points; ++i) zs.push_back(L * i / (num_points - 1));
    for (const auto& d : defects) zs.push_back(d.position_um);
    std::sort(zs.begin(), zs.end());
    zs.erase(std::unique(zs.begin(), zs.end()), zs.end());

    const auto ref = ideal_reference(spec);
    const auto profile = phase_profile(spec, defects);
    std::vector<EvolutionSample> out;
    out.reserve(zs.size());
    for (double z : zs)
        out.push_back({units::um_to_cm(z),
                       std::norm(detail::amplitude_um(spec, profile, q, z)) / ref.peak_power});
    return out;
}

enum class EfficiencyMode : std::uint8_t { at_nominal_q, peak_in_window };

/// Points of the dense scan in peak_in_window mode.
constexpr int peak_scan_points = 513;
/// Half-width of the peak search window in units of 1/L.
constexpr double peak_window_half_width = 10.0;

inline double relative_efficiency(const WaveguideSpec& spec, const DefectMap& defects,
                                  EfficiencyMode mode, const IdealReference& ref) {
    defects.check_within(spec);
    const auto profile = phase_profile(spec, defects);
    const double L = spec.length_um();
    const double q0 = spec.nominal_q();
    auto power = [&](double q) { return std::norm(detail::amplitude_um(spec, profile, q, L)); };

    if (mode == EfficiencyMode::at_nominal_q) return power(q0) / ref.peak_power;

    const double lo = q0 - peak_window_half_width / L;
    const double hi = q0 + peak_window_half_width / L;
    const double step = (hi - lo) / (peak_scan_points - 1);
    double best_q = lo;
    double best = -1.0;
    for (int i = 0; i < peak_scan_points; ++i) {
        const double q = lo + step * i;
        const double p = power(q);
        if (p > best) {
            best = p;
            best_q = q;
        }
    }
    const auto refined = boost::math::tools::brent_find_minima(
        [&](double u) { return -power(best_q + u * step); }, best_q == lo ? 0.0 : -1.0,
        best_q == hi ? 0.0 : 1.0, std::numeric_limits<double>::digits / 2);
    return std::max(best, -refined.second) / ref.peak_power;
}

inline double relative_efficiency(const WaveguideSpec& spec, const DefectMap& defects,
                                  EfficiencyMode mode = EfficiencyMode::peak_in_window) {
    return relative_efficiency(spec, defects, mode, ideal_reference(spec));
}

}  // namespace qfcsim
