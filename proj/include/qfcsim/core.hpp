#pragma once

#include "qfcsim/errors.hpp"
#include "qfcsim/units.hpp"

#include <cmath>
#include <string>

namespace qfcsim {

/// Signal, pump and converted wavelengths of the difference-frequency process.
struct WavelengthTriple {
    double signal_nm = 393.0;
    double pump_nm = 527.0;
    double converted_nm = 1550.0;
};

/// |1/l1 - 1/l2 - 1/l3| in nm^-1.
inline double check_energy_conservation(const WavelengthTriple& w) {
    detail::require(w.signal_nm > 0 && w.pump_nm > 0 && w.converted_nm > 0,
                    "wavelengths must be positive");
    return std::abs(1.0 / w.signal_nm - 1.0 / w.pump_nm - 1.0 / w.converted_nm);
}

/// Relative gate applied at construction: residual * l1 must stay below this.
constexpr double energy_conservation_gate = 1e-2;

inline bool passes_energy_gate(const WavelengthTriple& w) {
    return check_energy_conservation(w) * w.signal_nm < energy_conservation_gate;
}

/// Waveguide geometry and QPM grating. Immutable once built.
class WaveguideSpec {
public:
    WaveguideSpec(double length_cm, double poling_period_um, double d_eff = 1.0,
                  WavelengthTriple wavelengths = {})
        : length_cm_(length_cm),
          period_um_(poling_period_um),
          d_eff_(d_eff),
          wavelengths_(wavelengths) {
        detail::require(std::isfinite(length_cm) && length_cm > 0, "length_cm must be > 0");
        detail::require(std::isfinite(poling_period_um) && poling_period_um > 0,
                        "poling_period_um must be > 0");
        detail::require(std::isfinite(d_eff), "d_eff must be finite");
        if (!passes_energy_gate(wavelengths))
            throw ValidationError("wavelength triple violates energy conservation (residual " +
                                  std::to_string(check_energy_conservation(wavelengths)) +
                                  " nm^-1)");
    }

    double length_cm() const noexcept { return length_cm_; }
    double length_um() const noexcept { return units::cm_to_um(length_cm_); }
    double poling_period_um() const noexcept { return period_um_; }
    double d_eff() const noexcept { return d_eff_; }
    const WavelengthTriple& wavelengths() const noexcept { return wavelengths_; }

    /// First-order grating frequency 1/Lambda in um^-1.
    double nominal_q() const noexcept { return 1.0 / period_um_; }

    WaveguideSpec with_length_cm(double length_cm) const {
        return WaveguideSpec(length_cm, period_um_, d_eff_, wavelengths_);
    }

private:
    double length_cm_;
    double period_um_;
    double d_eff_;
    WavelengthTriple wavelengths_;
};

/// Power attenuation coefficients (cm^-1) of signal, pump and converted wave.
class LossSet {
public:
    LossSet() = default;
    LossSet(double alpha1, double alpha2, double alpha3) : a1_(alpha1), a2_(alpha2), a3_(alpha3) {
        detail::require(alpha1 >= 0 && alpha2 >= 0 && alpha3 >= 0,
                        "attenuation coefficients must be >= 0");
    }

    double alpha1() const noexcept { return a1_; }
    double alpha2() const noexcept { return a2_; }
    double alpha3() const noexcept { return a3_; }
    double delta_alpha() const noexcept { return 0.5 * (a1_ + a2_ - a3_); }

private:
    double a1_ = 0.0;
    double a2_ = 0.0;
    double a3_ = 0.0;
};

/// Transmission factors of the conversion module. The detector efficiency is
/// carried along for reporting but is not part of the external efficiency.
struct ThroughputBudget {
    double t_waveguide = 1.0;
    double t_collect = 1.0;
    double t_filter = 1.0;
    double detector_efficiency = 1.0;

    void validate() const {
        auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
        detail::require(unit(t_waveguide), "t_waveguide must lie in [0,1]");
        detail::require(unit(t_collect), "t_collect must lie in [0,1]");
        detail::require(unit(t_filter), "t_filter must lie in [0,1]");
        detail::require(unit(detector_efficiency), "detector_efficiency must lie in [0,1]");
    }
};

/// eta_ext = T_WG * eta_int * T_collect * T_filter
inline double external_efficiency(const ThroughputBudget& budget, double eta_int) {
    budget.validate();
    detail::require(eta_int >= 0.0, "eta_int must be >= 0");
    return budget.t_waveguide * eta_int * budget.t_collect * budget.t_filter;
}

}  // namespace qfcsim
