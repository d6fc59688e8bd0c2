#pragma once

// Pump-induced noise with back-conversion.
//
// Noise photons generated at x travel s = L - x to the output; on the way a
// fraction eta_max sin^2(s g) is back-converted. The lossy model also weights
// the generation by the pump profile and the converted-band transmission:
//
//   N(P) = a P int_0^L e^{ap s} [ 1 - (1 - e^{-ad s}) - eta_max sin^2(s sqrt(eta_nor P e^{ap s})) ] dx
//
// with s = L - x. The growth factor e^{ap s} is used as written by default;
// SignConvention::attenuating swaps it for the decaying pump e^{-ap x}.

#include "qfcsim/cme.hpp"
#include "qfcsim/core.hpp"
#include "qfcsim/errors.hpp"
#include "qfcsim/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

namespace qfcsim {

enum class SignConvention : std::uint8_t { printed, attenuating };

struct NoiseParams {
    double a_hz_per_w_per_cm = 1.0;
    double alpha_pump_per_cm = 0.0;
    double alpha_dfg_per_cm = 0.0;
    double eta_nor = 0.0;  // W^-1 cm^-2
    double eta_int_max = 1.0;
    double length_cm = 2.0;
    SignConvention sign = SignConvention::printed;

    void validate() const {
        detail::require(a_hz_per_w_per_cm >= 0.0, "noise coefficient a must be >= 0");
        detail::require(alpha_pump_per_cm >= 0.0 && alpha_dfg_per_cm >= 0.0,
                        "attenuation coefficients must be >= 0");
        detail::require(eta_nor >= 0.0, "eta_nor must be >= 0");
        detail::require(eta_int_max >= 0.0 && eta_int_max <= 1.0, "eta_int_max must lie in [0,1]");
        detail::require(length_cm > 0.0, "length_cm must be > 0");
    }
};

/// a P int_0^L [1 - eta_max sin^2((L - x) k)] dx with k = sqrt(eta_nor P), in
/// closed form: int_0^L sin^2(s k) ds = L/2 - sin(2 k L) / (4 k).
inline double noise_lossless(double p_w, const NoiseParams& params) {
    params.validate();
    detail::require(p_w >= 0.0, "pump power must be >= 0");
    const double L = params.length_cm;
    const double k = std::sqrt(params.eta_nor * p_w);
    const double sin2_integral = k * L < 1e-6 ? k * k * L * L * L / 3.0
                                              : 0.5 * L - std::sin(2.0 * k * L) / (4.0 * k);
    return params.a_hz_per_w_per_cm * p_w * (L - params.eta_int_max * sin2_integral);
}

namespace detail {

/// Pump weight e^{ap s} (printed) or e^{-ap x} (attenuating) at distance s
/// from the output.
inline double pump_weight(const NoiseParams& p, double s) {
    return p.sign == SignConvention::printed ? std::exp(p.alpha_pump_per_cm * s)
                                             : std::exp(-p.alpha_pump_per_cm * (p.length_cm - s));
}

inline double noise_integrand(const NoiseParams& p, double p_w, double x) {
    const double s = p.length_cm - x;
    const double weight = pump_weight(p, s);
    const double dfg_transmitted = 1.0 - (1.0 - std::exp(-p.alpha_dfg_per_cm * s));
    const double phase = s * std::sqrt(p.eta_nor * p_w * weight);
    const double back = std::sin(phase);
    return weight * (dfg_transmitted - p.eta_int_max * back * back);
}

/// d(phase)/ds, used to size panels to a quarter of the local sin^2 period.
/// Both conventions give sqrt(eta_nor P w(s)) (1 + ap s / 2).
inline double phase_rate(const NoiseParams& p, double p_w, double s) {
    const double k0 = std::sqrt(p.eta_nor * p_w);
    return k0 * std::sqrt(pump_weight(p, s)) * (1.0 + 0.5 * p.alpha_pump_per_cm * s);
}

inline std::vector<double> noise_panels(const NoiseParams& p, double p_w, int initial_panels) {
    const double L = p.length_cm;
    const double max_len = L / initial_panels;
    std::vector<double> bps{0.0};
    double x = 0.0;
    while (x < L) {
        // phase rate grows with s = L - x, so the panel's left end is its worst point
        const double rate = phase_rate(p, p_w, L - x);
        const double quarter = rate > 0.0 ? 0.25 * std::numbers::pi / rate : max_len;
        const double h = std::min(max_len, quarter);
        x = (L - x) <= h * (1.0 + 1e-12) ? L : x + h;
        bps.push_back(x);
    }
    return bps;
}

}  // namespace detail

struct NoiseQuadrature {
    int initial_panels = 8;
    quadrature::Options options{};
};

inline double noise_lossy(double p_w, const NoiseParams& params, const NoiseQuadrature& quad = {}) {
    params.validate();
    detail::require(p_w >= 0.0, "pump power must be >= 0");
    detail::require(quad.initial_panels >= 1, "initial_panels must be >= 1");
    if (p_w == 0.0) return 0.0;
    const auto bps = detail::noise_panels(params, p_w, quad.initial_panels);
    const auto res = quadrature::integrate_panels(
        [&](double x) { return detail::noise_integrand(params, p_w, x); }, bps, quad.options);
    return params.a_hz_per_w_per_cm * p_w * res.value;
}

struct EnrPoint {
    double pump_power_w = 0.0;
    double eta_int = 0.0;
    double eta_ext = 0.0;
    double noise_hz = 0.0;
    std::optional<double> enr;  // absent where the noise vanishes
};

struct EnrCurve {
    std::vector<EnrPoint> points;
    std::size_t argmax_eta_ext = 0;
    std::optional<std::size_t> argmax_enr;
};

/// External efficiency (from the coupled-mode solution), lossy noise and
/// their ratio over a pump sweep. `cme.pump_power_w` is ignored.
inline EnrCurve enr_curve(const std::vector<double>& p_sweep_w, const NoiseParams& noise,
                          const CmeParams& cme, const ThroughputBudget& budget) {
    detail::require(!p_sweep_w.empty(), "pump sweep must be nonempty");
    const auto eff = internal_efficiency_curve(cme, p_sweep_w);
    EnrCurve curve;
    curve.points.reserve(p_sweep_w.size());
    for (std::size_t i = 0; i < p_sweep_w.size(); ++i) {
        EnrPoint pt;
        pt.pump_power_w = p_sweep_w[i];
        pt.eta_int = eff[i].eta_int;
        pt.eta_ext = external_efficiency(budget, pt.eta_int);
        pt.noise_hz = noise_lossy(p_sweep_w[i], noise);
        if (pt.noise_hz > 0.0) pt.enr = pt.eta_ext / pt.noise_hz;
        curve.points.push_back(pt);
    }
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
        const auto& pt = curve.points[i];
        if (pt.eta_ext > curve.points[curve.argmax_eta_ext].eta_ext) curve.argmax_eta_ext = i;
        if (pt.enr && (!curve.argmax_enr || *pt.enr > *curve.points[*curve.argmax_enr].enr))
            curve.argmax_enr = i;
    }
    return curve;
}

}  // namespace qfcsim
