#pragma once

// Propagation loss from cut-back series and Fabry-Perot fringe contrast.

#include "qfcsim/errors.hpp"
#include "qfcsim/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace qfcsim {

struct CutbackPoint {
    double length_cm = 0.0;
    double transmission = 0.0;
};

struct CutbackResult {
    double alpha_per_cm = 0.0;
    std::optional<double> std_error;  // absent for two lengths
    double r2 = 0.0;
    double intercept = 0.0;           // ln T at zero length (coupling loss)
};

/// ln T = ln T0 - alpha L by ordinary least squares.
inline CutbackResult cutback_fit(const std::vector<CutbackPoint>& data) {
    detail::require(data.size() >= 2, "cut-back needs at least 2 points");
    std::vector<double> x, y;
    x.reserve(data.size());
    y.reserve(data.size());
    for (const auto& p : data) {
        detail::require(p.length_cm > 0.0, "cut-back lengths must be > 0");
        detail::require(p.transmission > 0.0 && p.transmission <= 1.0,
                        "cut-back transmissions must lie in (0, 1]");
        x.push_back(p.length_cm);
        y.push_back(std::log(p.transmission));
    }
    const auto fit = fit_linear(x, y);
    const auto& slope = fit.param("slope");
    return {-slope.value, slope.std_error, fit.r2, fit.value("intercept")};
}

struct FpContrast {
    double b = 0.0;
    double t_max = 0.0;
    double t_min = 0.0;
    std::size_t maxima_used = 0;
    std::size_t minima_used = 0;
    std::size_t extrema_found = 0;
};

struct SpectrumPoint {
    double frequency_ghz = 0.0;
    double transmission = 0.0;
};

namespace detail {

struct Extrema {
    std::vector<double> maxima, minima;
};

/// Interior local extrema; runs of equal values count once.
inline Extrema find_extrema(const std::vector<SpectrumPoint>& spectrum) {
    std::vector<double> runs;
    for (const auto& p : spectrum)
        if (runs.empty() || p.transmission != runs.back()) runs.push_back(p.transmission);
    Extrema e;
    for (std::size_t i = 1; i + 1 < runs.size(); ++i) {
        if (runs[i] > runs[i - 1] && runs[i] > runs[i + 1]) e.maxima.push_back(runs[i]);
        if (runs[i] < runs[i - 1] && runs[i] < runs[i + 1]) e.minima.push_back(runs[i]);
    }
    return e;
}

}  // namespace detail

constexpr std::size_t fp_extrema_averaged = 5;
constexpr std::size_t fp_min_extrema = 7;

/// b = <T_min> / <T_max>, averaging the k largest maxima and k smallest
/// minima with k = min(5, available).
inline FpContrast fp_contrast(const std::vector<SpectrumPoint>& spectrum) {
    for (const auto& p : spectrum)
        detail::require(p.transmission >= 0.0, "spectrum transmissions must be >= 0");
    auto e = detail::find_extrema(spectrum);
    if (e.maxima.size() < 2 || e.minima.size() < 2)
        throw ValidationError("insufficient fringes: found " + std::to_string(e.maxima.size()) +
                              " maxima and " + std::to_string(e.minima.size()) + " minima");
    std::sort(e.maxima.begin(), e.maxima.end(), std::greater<>());
    std::sort(e.minima.begin(), e.minima.end());
    const auto km = std::min(fp_extrema_averaged, e.maxima.size());
    const auto kn = std::min(fp_extrema_averaged, e.minima.size());
    double tmax = 0.0, tmin = 0.0;
    for (std::size_t i = 0; i < km; ++i) tmax += e.maxima[i];
    for (std::size_t i = 0; i < kn; ++i) tmin += e.minima[i];
    tmax /= static_cast<double>(km);
    tmin /= static_cast<double>(kn);
    detail::require(tmax > 0.0, "fringe maxima are zero");
    return {tmin / tmax, tmax, tmin, km, kn, e.maxima.size() + e.minima.size()};
}

/// Facet (Fresnel) reflectivity ((n - 1)/(n + 1))^2.
inline double facet_reflectivity(double n) { return ((n - 1.0) / (n + 1.0)) * ((n - 1.0) / (n + 1.0)); }

/// Contrast T_min/T_max of a lossy Fabry-Perot cavity, ((1 - z)/(1 + z))^2
/// with z = R e^{-alpha L}.
inline double fp_forward_contrast(double alpha_per_cm, double n, double length_cm) {
    const double z = facet_reflectivity(n) * std::exp(-alpha_per_cm * length_cm);
    return ((1.0 - z) / (1.0 + z)) * ((1.0 - z) / (1.0 + z));
}

/// alpha = ln(R / R_bar) / L with R_bar = (1 - sqrt b)/(1 + sqrt b).
inline double fp_loss(double b, double n, double length_cm) {
    detail::require(b > 0.0 && b < 1.0, "contrast b must lie in (0, 1)");
    detail::require(n > 1.0, "refractive index must be > 1");
    detail::require(length_cm > 0.0, "length must be > 0");
    const double R = facet_reflectivity(n);
    const double sb = std::sqrt(b);
    const double r_bar = (1.0 - sb) / (1.0 + sb);
    const double alpha = std::log(R / r_bar) / length_cm;
    if (r_bar > R) {
        // a few ulps above R is the lossless limit, not a negative loss
        if (r_bar - R <= 1e-12 * R) return 0.0;
        throw NegativeLossError("contrast exceeds facet-reflection limit (alpha would be " +
                                    std::to_string(alpha) + " cm^-1)",
                                alpha);
    }
    return alpha;
}

/// Fabry-Perot input: either a measured spectrum or a precomputed contrast.
struct FpMeasurement {
    std::vector<SpectrumPoint> spectrum;
    std::optional<double> contrast;
    double refractive_index = 0.0;
    double length_cm = 0.0;

    void validate() const {
        detail::require(refractive_index > 1.0, "refractive index must be > 1");
        detail::require(length_cm > 0.0, "length must be > 0");
        if (contrast) {
            detail::require(*contrast > 0.0 && *contrast < 1.0, "contrast b must lie in (0, 1)");
        } else {
            const auto e = detail::find_extrema(spectrum);
            detail::require(e.maxima.size() + e.minima.size() >= fp_min_extrema,
                            "spectrum must show at least 3 fringe periods (7 extrema)");
        }
    }
};

struct FpLossResult {
    double alpha_per_cm = 0.0;
    double b = 0.0;
    std::optional<FpContrast> contrast;
};

inline FpLossResult fp_loss(const FpMeasurement& m) {
    m.validate();
    FpLossResult r;
    if (m.contrast) {
        r.b = *m.contrast;
    } else {
        r.contrast = fp_contrast(m.spectrum);
        r.b = r.contrast->b;
    }
    r.alpha_per_cm = fp_loss(r.b, m.refractive_index, m.length_cm);
    return r;
}

}  // namespace qfcsim
