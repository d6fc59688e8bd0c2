#pragma once

// Composite Gauss-Legendre quadrature with per-panel bisection. Callers
// supply the initial panel breakpoints (e.g. sized to a local oscillation
// period); each panel is split until the 10-point rule agrees with the sum
// over its two halves.

#include "qfcsim/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <span>
#include <string>
#include <vector>

namespace qfcsim::quadrature {

struct Options {
    double rel_tol = 1e-9;
    int max_depth = 40;
};

struct Result {
    double value = 0.0;
    double error_estimate = 0.0;
    long panels = 0;
};

/// Fixed Gauss-Legendre rule with `Points` nodes on [a, b]. Points must be even.
template <unsigned Points, class F>
double gauss_legendre(F&& f, double a, double b) {
    static_assert(Points % 2 == 0);
    using rule = boost::math::quadrature::gauss<double, Points>;
    const auto& x = rule::abscissa();
    const auto& w = rule::weights();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        sum += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
    return sum * half;
}

template <class F>
Result integrate_panels(F&& f, std::span<const double> breakpoints, const Options& opts = {}) {
    detail::require(breakpoints.size() >= 2, "need at least one panel");
    constexpr unsigned points = 10;

    // A coarse pass sets the absolute tolerance scale.
    double coarse = 0.0;
    double coarse_abs = 0.0;
    std::vector<double> first_pass(breakpoints.size() - 1);
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        detail::require(breakpoints[i + 1] > breakpoints[i], "breakpoints must increase");
        first_pass[i] = gauss_legendre<points>(f, breakpoints[i], breakpoints[i + 1]);
        coarse += first_pass[i];
        coarse_abs += std::abs(first_pass[i]);
    }
    const double span_total = breakpoints.back() - breakpoints.front();
    const double scale = std::max(std::abs(coarse), 1e-300 + 1e-3 * coarse_abs);
    const double density = opts.rel_tol * scale / span_total;

    struct Panel {
        double a, b, estimate;
        int depth;
    };
    Result res;
    std::vector<Panel> stack;
    for (std::size_t i = first_pass.size(); i-- > 0;)
        stack.push_back({breakpoints[i], breakpoints[i + 1], first_pass[i], 0});

    while (!stack.empty()) {
        const Panel p = stack.back();
        stack.pop_back();
        const double m = 0.5 * (p.a + p.b);
        const double left = gauss_legendre<points>(f, p.a, m);
        const double right = gauss_legendre<points>(f, m, p.b);
        const double diff = std::abs(left + right - p.estimate);
        if (diff <= density * (p.b - p.a) || (p.b - p.a) <= 1e-14 * span_total) {
            res.value += left + right;
            res.error_estimate += diff;
            ++res.panels;
            continue;
        }
        if (p.depth >= opts.max_depth) {
            double partial = res.value + left + right;
            for (const auto& q : stack) partial += q.estimate;
            throw QuadratureFailure("adaptive quadrature exceeded bisection depth " +
                                        std::to_string(opts.max_depth),
                                    partial);
        }
        stack.push_back({m, p.b, right, p.depth + 1});
        stack.push_back({p.a, m, left, p.depth + 1});
    }
    return res;
}

}  // namespace qfcsim::quadrature
