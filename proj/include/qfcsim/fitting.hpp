#pragma once

// Least-squares fits: closed-form linear regression, a damped Gauss-Newton
// (Levenberg-Marquardt) engine with a central-difference Jacobian, and the
// efficiency/noise model fits built on them. Confidence intervals are
// value +/- 1.96 stderr.

#include "qfcsim/cme.hpp"
#include "qfcsim/core.hpp"
#include "qfcsim/errors.hpp"
#include "qfcsim/noise_model.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qfcsim {

constexpr double ci95_z = 1.96;

struct FitParameter {
    std::string name;
    double value = 0.0;
    std::optional<double> std_error;  // absent with zero residual degrees of freedom

    std::optional<double> ci95_lo() const {
        return std_error ? std::optional<double>(value - ci95_z * *std_error) : std::nullopt;
    }
    std::optional<double> ci95_hi() const {
        return std_error ? std::optional<double>(value + ci95_z * *std_error) : std::nullopt;
    }
};

struct FitResult {
    std::vector<FitParameter> params;
    double r2 = 0.0;
    std::vector<double> residuals;  // data - model
    int iterations = 0;
    bool converged = true;

    const FitParameter& param(const std::string& name) const {
        for (const auto& p : params)
            if (p.name == name) return p;
        throw ValidationError("no fit parameter named '" + name + "'");
    }
    double value(const std::string& name) const { return param(name).value; }

    double residual_norm() const {
        double s = 0.0;
        for (double r : residuals) s += r * r;
        return std::sqrt(s);
    }
};

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
};

namespace detail {

/// 1 - SSres/SStot; a constant data set fitted exactly counts as 1.
inline double r_squared(std::span<const double> y, std::span<const double> residuals) {
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_tot += (y[i] - mean) * (y[i] - mean);
        ss_res += residuals[i] * residuals[i];
    }
    if (ss_tot == 0.0) return ss_res == 0.0 ? 1.0 : 0.0;
    return 1.0 - ss_res / ss_tot;
}

inline std::vector<double> xs_of(std::span<const DataPoint> d) {
    std::vector<double> v(d.size());
    std::transform(d.begin(), d.end(), v.begin(), [](const DataPoint& p) { return p.x; });
    return v;
}

inline std::vector<double> ys_of(std::span<const DataPoint> d) {
    std::vector<double> v(d.size());
    std::transform(d.begin(), d.end(), v.begin(), [](const DataPoint& p) { return p.y; });
    return v;
}

}  // namespace detail

/// Ordinary least squares y = slope * x + intercept.
inline FitResult fit_linear(std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == y.size(), "x and y must have equal length");
    detail::require(x.size() >= 2, "linear fit needs at least 2 points");
    const double n = static_cast<double>(x.size());
    const double xm = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double ym = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
    }
    if (!(sxx > 0.0)) throw ValidationError("degenerate design: all x values are equal");
    const double slope = sxy / sxx;
    const double intercept = ym - slope * xm;

    FitResult res;
    res.residuals.resize(x.size());
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        res.residuals[i] = y[i] - (slope * x[i] + intercept);
        ss_res += res.residuals[i] * res.residuals[i];
    }
    std::optional<double> se_slope, se_intercept;
    if (x.size() > 2) {
        const double s2 = ss_res / (n - 2.0);
        se_slope = std::sqrt(s2 / sxx);
        se_intercept = std::sqrt(s2 * (1.0 / n + xm * xm / sxx));
    }
    res.params = {{"slope", slope, se_slope}, {"intercept", intercept, se_intercept}};
    res.r2 = detail::r_squared(y, res.residuals);
    return res;
}

/// Least squares through the origin, y = slope * x.
inline FitResult fit_proportional(std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == y.size(), "x and y must have equal length");
    detail::require(!x.empty(), "fit needs at least 1 point");
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (!(sxx > 0.0)) throw ValidationError("degenerate design: all x values are zero");
    const double slope = sxy / sxx;
    FitResult res;
    res.residuals.resize(x.size());
    double ss_res = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        res.residuals[i] = y[i] - slope * x[i];
        ss_res += res.residuals[i] * res.residuals[i];
    }
    std::optional<double> se;
    if (x.size() > 1) se = std::sqrt(ss_res / (static_cast<double>(x.size()) - 1.0) / sxx);
    res.params = {{"slope", slope, se}};
    res.r2 = detail::r_squared(y, res.residuals);
    return res;
}

struct Bounds {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

struct NlsOptions {
    int max_iterations = 200;
    double param_tol = 1e-10;
    double initial_damping = 1e-3;
    double damping_factor = 10.0;
    double rank_tol = 1e-10;
};

/// Levenberg-Marquardt on sum (y - model(x, p))^2.
///
/// Damping is multiplicative on the diagonal of J^T J (Marquardt scaling),
/// raised tenfold after a rejected step and lowered tenfold after an accepted
/// one. The Jacobian uses central differences with step 1e-6 max(|p|, 1).
/// Iteration stops once a step changes the parameters by less than param_tol
/// relative, or after max_iterations (then `converged` is false and the best
/// point is returned). Covariance is (J^T J)^-1 times the residual variance.
template <class Model>
FitResult fit_nls(Model&& model, std::span<const DataPoint> data, std::vector<double> init,
                  std::vector<std::string> names, std::vector<Bounds> bounds = {},
                  const NlsOptions& opts = {}) {
    const auto np = init.size();
    detail::require(np >= 1, "at least one parameter required");
    detail::require(names.size() == np, "one name per parameter required");
    if (bounds.empty()) bounds.assign(np, Bounds{});
    detail::require(bounds.size() == np, "one bound per parameter required");
    detail::require(data.size() >= np, "need at least as many data points as parameters");
    for (std::size_t j = 0; j < np; ++j)
        detail::require(init[j] >= bounds[j].lo && init[j] <= bounds[j].hi,
                        "initial value of '" + names[j] + "' outside its bounds");

    const auto n = static_cast<Eigen::Index>(data.size());
    const auto p = static_cast<Eigen::Index>(np);
    using Vec = Eigen::VectorXd;
    using Mat = Eigen::MatrixXd;

    auto residuals = [&](const Vec& params) {
        const std::span<const double> ps(params.data(), np);
        Vec r(n);
        for (Eigen::Index i = 0; i < n; ++i) r[i] = data[i].y - model(data[i].x, ps);
        return r;
    };
    // Jacobian of the model (= -d residual / d p).
    auto jacobian = [&](const Vec& params) {
        Mat J(n, p);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double h = 1e-6 * std::max(std::abs(params[j]), 1.0);
            Vec up = params, down = params;
            up[j] += h;
            down[j] -= h;
            J.col(j) = (residuals(down) - residuals(up)) / (2.0 * h);
        }
        return J;
    };
    auto clamp = [&](Vec v) {
        for (Eigen::Index j = 0; j < p; ++j) v[j] = std::clamp(v[j], bounds[j].lo, bounds[j].hi);
        return v;
    };
    auto check_rank = [&](const Mat& J) {
        Eigen::ColPivHouseholderQR<Mat> qr(J);
        qr.setThreshold(opts.rank_tol);
        if (qr.rank() < p)
            throw RankDeficiencyError("singular normal equations: Jacobian rank " +
                                      std::to_string(qr.rank()) + " < " + std::to_string(p) +
                                      " parameters");
    };

    Vec params = Eigen::Map<const Vec>(init.data(), p);
    Vec r = residuals(params);
    double cost = r.squaredNorm();
    double mu = opts.initial_damping;
    bool converged = false;
    int it = 0;
    Mat J = jacobian(params);
    check_rank(J);

    for (; it < opts.max_iterations && !converged; ++it) {
        const Mat JtJ = J.transpose() * J;
        const Vec g = J.transpose() * r;
        bool accepted = false;
        while (!accepted) {
            Mat A = JtJ;
            A.diagonal() += mu * JtJ.diagonal();
            const Vec step = A.ldlt().solve(g);
            const Vec trial = clamp(params + step);
            const double change = (trial - params).norm();
            if (change <= opts.param_tol * (params.norm() + opts.param_tol)) {
                converged = true;
                break;
            }
            const Vec rt = residuals(trial);
            const double ct = rt.squaredNorm();
            if (std::isfinite(ct) && ct <= cost) {
                params = trial;
                r = rt;
                cost = ct;
                mu = std::max(mu / opts.damping_factor, 1e-15);
                accepted = true;
                if (change <= opts.param_tol * params.norm()) converged = true;
            } else {
                mu *= opts.damping_factor;
                if (mu > 1e16) {
                    // No descent direction left at working precision.
                    converged = true;
                    break;
                }
            }
        }
        if (accepted) J = jacobian(params);
    }

    check_rank(J);
    FitResult res;
    res.iterations = it;
    res.converged = converged;
    res.residuals.assign(r.data(), r.data() + n);
    const auto ys = detail::ys_of(data);
    res.r2 = detail::r_squared(ys, res.residuals);
    std::optional<Mat> cov;
    if (n > p) {
        const double s2 = cost / static_cast<double>(n - p);
        cov = (J.transpose() * J).inverse() * s2;
    }
    for (std::size_t j = 0; j < np; ++j) {
        std::optional<double> se;
        if (cov) se = std::sqrt(std::max(0.0, (*cov)(j, j)));
        res.params.push_back({names[j], params[static_cast<Eigen::Index>(j)], se});
    }
    return res;
}

/// Low-conversion fit of eta_int = eta_nor * gain * P2_out over the first
/// `n_points` points in ascending power, where gain = (e^{dA L} - 1)^2 / dA^2.
/// The reported parameter is eta_nor in W^-1 cm^-2.
inline FitResult fit_efficiency_low_conversion(std::span<const DataPoint> data,
                                               const LossSet& losses, double length_cm,
                                               std::size_t n_points = 5) {
    detail::require(n_points >= 1 && n_points <= data.size(),
                    "n_points must lie in [1, number of data points]");
    std::vector<DataPoint> sorted(data.begin(), data.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });
    sorted.resize(n_points);
    const auto x = detail::xs_of(sorted);
    const auto y = detail::ys_of(sorted);
    auto res = fit_proportional(x, y);
    const double gain = low_conversion_gain(losses, length_cm);
    auto& slope = res.params.front();
    slope.name = "eta_nor";
    slope.value /= gain;
    if (slope.std_error) *slope.std_error /= gain;
    return res;
}

/// Full-sweep fit of sin^2(sqrt(eta_nor P) L). The start value places the
/// sin^2 maximum at the largest measured efficiency.
inline FitResult fit_efficiency_sin2(std::span<const DataPoint> data, double length_cm) {
    detail::require(!data.empty(), "data must be nonempty");
    detail::require(length_cm > 0.0, "length_cm must be > 0");
    const auto peak = std::max_element(data.begin(), data.end(), [](const auto& a, const auto& b) {
        return a.y < b.y;
    });
    double init = 1.0;
    if (peak->x > 0.0) {
        const double k = 0.5 * std::numbers::pi / length_cm;
        init = k * k / peak->x;
    }
    auto model = [length_cm](double p2, std::span<const double> prm) {
        return eta_sin2(std::max(prm[0], 0.0), std::max(p2, 0.0), length_cm);
    };
    return fit_nls(model, data, {init}, {"eta_nor"}, {Bounds{0.0, 1e9}});
}

enum class NoiseModelKind : std::uint8_t { lossless, lossy };

/// One-parameter fit of the noise coefficient a. The model is linear in a,
/// so a = sum(m y) / sum(m^2) with m the model evaluated at a = 1.
inline FitResult fit_noise(std::span<const DataPoint> data, NoiseParams fixed, NoiseModelKind kind) {
    detail::require(!data.empty(), "data must be nonempty");
    fixed.a_hz_per_w_per_cm = 1.0;
    std::vector<double> m(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        m[i] = kind == NoiseModelKind::lossless ? noise_lossless(data[i].x, fixed)
                                                : noise_lossy(data[i].x, fixed);
    const auto y = detail::ys_of(data);
    FitResult res;
    try {
        res = fit_proportional(m, y);
    } catch (const ValidationError&) {
        throw ValidationError("degenerate noise fit: model predictions are all zero");
    }
    res.params.front().name = "a";
    return res;
}

/// Rescales a fitted eta_nor by the simulated-to-measured peak efficiency
/// ratio, removing the share of signal carried by unmatched higher modes.
inline double correct_higher_modes(double eta_nor_fit, double eta_peak_measured,
                                   double eta_peak_simulated) {
    detail::require(eta_peak_measured > 0.0, "measured peak efficiency must be > 0");
    return eta_nor_fit * (eta_peak_simulated / eta_peak_measured);
}

}  // namespace qfcsim
