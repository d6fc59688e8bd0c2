#pragma once

// Counter-tuning of the DFG phase-matching temperature and the SPDC noise
// structure with pump wavelength, both linear in the detuning.

#include "qfcsim/errors.hpp"
#include "qfcsim/units.hpp"

#include <cmath>
#include <sstream>
#include <utility>
#include <vector>

namespace qfcsim {

struct TuningModel {
    double lambda_ref_nm = 527.37;
    double t_dfg_ref_c = 33.0;
    double slope_dfg_c_per_pm = -0.01;
    double t_spdc_ref_c = 33.0;
    double slope_spdc_c_per_pm = 0.02;  // measured; theory gives +0.03

    void validate() const {
        detail::require(lambda_ref_nm > 0.0, "reference wavelength must be > 0");
        detail::require(std::isfinite(slope_dfg_c_per_pm) && std::isfinite(slope_spdc_c_per_pm),
                        "tuning slopes must be finite");
    }

    double dfg_shift_c(double lambda_nm) const {
        return slope_dfg_c_per_pm * units::nm_to_pm(lambda_nm - lambda_ref_nm);
    }
    double spdc_shift_c(double lambda_nm) const {
        return slope_spdc_c_per_pm * units::nm_to_pm(lambda_nm - lambda_ref_nm);
    }
};

struct OperatingPoints {
    double t_dfg_c = 0.0;
    double t_spdc_c = 0.0;
};

inline OperatingPoints predict_operating_points(const TuningModel& model, double lambda_pump_nm) {
    model.validate();
    return {model.t_dfg_ref_c + model.dfg_shift_c(lambda_pump_nm),
            model.t_spdc_ref_c + model.spdc_shift_c(lambda_pump_nm)};
}

struct NoiseSample {
    double temperature_c = 0.0;
    double counts_hz = 0.0;
};

/// Noise counts versus waveguide temperature recorded at the reference pump
/// wavelength.
class NoiseProfile {
public:
    explicit NoiseProfile(std::vector<NoiseSample> samples) : samples_(std::move(samples)) {
        detail::require(samples_.size() >= 2, "noise profile needs at least 2 samples");
        for (std::size_t i = 1; i < samples_.size(); ++i)
            detail::require(samples_[i].temperature_c > samples_[i - 1].temperature_c,
                            "noise profile temperatures must be strictly increasing");
    }

    const std::vector<NoiseSample>& samples() const noexcept { return samples_; }
    double t_min() const { return samples_.front().temperature_c; }
    double t_max() const { return samples_.back().temperature_c; }
    bool covers(double t) const { return t >= t_min() && t <= t_max(); }

    /// Piecewise-linear interpolation; `t` must lie within the support.
    double at(double t) const {
        detail::require(covers(t), "temperature outside the noise profile");
        std::size_t i = 1;
        while (i + 1 < samples_.size() && samples_[i].temperature_c < t) ++i;
        const auto& lo = samples_[i - 1];
        const auto& hi = samples_[i];
        const double u = (t - lo.temperature_c) / (hi.temperature_c - lo.temperature_c);
        return lo.counts_hz + u * (hi.counts_hz - lo.counts_hz);
    }

private:
    std::vector<NoiseSample> samples_;
};

struct DetuningChoice {
    double lambda_opt_nm = 0.0;
    double predicted_noise_hz = 0.0;
    double worst_lambda_nm = 0.0;
    double worst_noise_hz = 0.0;
};

/// Scans the pump wavelength over a uniform grid and returns the wavelength
/// whose DFG operating temperature sees the least noise. The profile rides
/// the SPDC shift, so the noise at wavelength l is profile(t_dfg(l) - dT_spdc(l)).
/// Ties resolve to the smallest wavelength.
inline DetuningChoice suggest_pump_detuning(const TuningModel& model, const NoiseProfile& profile,
                                            std::pair<double, double> lambda_range_nm,
                                            int grid_points) {
    model.validate();
    detail::require(grid_points >= 2, "grid_points must be >= 2");
    const auto [lo, hi] = lambda_range_nm;
    detail::require(lo < hi, "wavelength range must satisfy lo < hi");

    DetuningChoice best{};
    bool first = true;
    for (int i = 0; i < grid_points; ++i) {
        const double lambda = lo + (hi - lo) * i / (grid_points - 1);
        const double t_probe = predict_operating_points(model, lambda).t_dfg_c -
                               model.spdc_shift_c(lambda);
        if (!profile.covers(t_probe)) {
            std::ostringstream msg;
            msg.precision(10);
            msg << "pump wavelength " << lambda << " nm maps to " << t_probe
                << " C, outside the noise profile [" << profile.t_min() << ", " << profile.t_max()
                << "] C";
            throw ValidationError(msg.str());
        }
        const double noise = profile.at(t_probe);
        if (first || noise < best.predicted_noise_hz) {
            best.lambda_opt_nm = lambda;
            best.predicted_noise_hz = noise;
        }
        if (first || noise > best.worst_noise_hz) {
            best.worst_lambda_nm = lambda;
            best.worst_noise_hz = noise;
        }
        first = false;
    }
    return best;
}

}  // namespace qfcsim
