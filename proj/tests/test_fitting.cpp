#include "qfcsim/fitting.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace qfcsim;

namespace {

const LossSet device_losses(0.22, 0.20, 0.12);

NoiseParams noise_fixed() {
    NoiseParams p;
    p.alpha_pump_per_cm = 0.20;
    p.alpha_dfg_per_cm = 0.12;
    p.eta_nor = 14.45;
    p.eta_int_max = 0.93;
    p.length_cm = 2.0;
    return p;
}

}  // namespace

TEST(FitLinear, ExactLine) {
    const std::vector<double> x{0, 1, 2, 3, 4}, y{1, 3, 5, 7, 9};
    const auto r = fit_linear(x, y);
    EXPECT_NEAR(r.value("slope"), 2.0, 1e-14);
    EXPECT_NEAR(r.value("intercept"), 1.0, 1e-14);
    EXPECT_NEAR(r.r2, 1.0, 1e-14);
}

TEST(FitLinear, ConstantData) {
    const std::vector<double> x{0, 1, 2, 3}, y{4, 4, 4, 4};
    EXPECT_NEAR(fit_linear(x, y).value("slope"), 0.0, 1e-15);
}

TEST(FitLinear, TwoPointsHaveNoStandardError) {
    const std::vector<double> x{1, 2}, y{3, 5};
    const auto r = fit_linear(x, y);
    EXPECT_FALSE(r.param("slope").std_error.has_value());
    EXPECT_FALSE(r.param("slope").ci95_lo().has_value());
}

TEST(FitLinear, DegenerateDesign) {
    const std::vector<double> x{2, 2, 2}, y{1, 2, 3};
    EXPECT_THROW(fit_linear(x, y), ValidationError);
}

TEST(FitLinear, IntervalCoverage) {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> noise(0.0, 0.3);
    int covered = 0;
    const int trials = 2000;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> x, y;
        for (int i = 0; i < 100; ++i) {
            x.push_back(0.1 * i);
            y.push_back(1.5 * x.back() - 0.4 + noise(rng));
        }
        const auto p = fit_linear(x, y).param("slope");
        if (*p.ci95_lo() <= 1.5 && 1.5 <= *p.ci95_hi()) ++covered;
    }
    const double rate = double(covered) / trials;
    EXPECT_GT(rate, 0.93);
    EXPECT_LT(rate, 0.965);
}

TEST(FitNls, RecoversSin2) {
    std::vector<DataPoint> d;
    for (int i = 1; i <= 30; ++i) {
        const double p = 0.004 * i;
        d.push_back({p, eta_sin2(8.31, p, 2.0)});
    }
    const auto r = fit_efficiency_sin2(d, 2.0);
    EXPECT_NEAR(r.value("eta_nor"), 8.31, 1e-8 * 8.31);
    EXPECT_TRUE(r.converged);
}

TEST(FitNls, RecoversTwoParameterModel) {
    std::vector<DataPoint> d;
    for (int i = 0; i < 25; ++i) {
        const double x = 0.2 * i;
        d.push_back({x, 3.0 * std::exp(-0.7 * x)});
    }
    auto model = [](double x, std::span<const double> p) { return p[0] * std::exp(-p[1] * x); };
    const auto r = fit_nls(model, d, {1.0, 0.1}, {"amp", "rate"});
    EXPECT_NEAR(r.value("amp"), 3.0, 3e-8);
    EXPECT_NEAR(r.value("rate"), 0.7, 7e-9);
}

TEST(FitNls, RedundantParameterIsRankDeficient) {
    std::vector<DataPoint> d;
    for (int i = 0; i < 10; ++i) d.push_back({double(i), 2.0 * i});
    auto model = [](double x, std::span<const double> p) { return p[0] * x; };
    EXPECT_THROW(fit_nls(model, d, {1.0, 5.0}, {"slope", "unused"}), RankDeficiencyError);
}

TEST(FitNls, IterationCapFlagsBestPoint) {
    std::vector<DataPoint> d;
    for (int i = 0; i < 25; ++i) d.push_back({0.2 * i, 3.0 * std::exp(-0.7 * 0.2 * i)});
    auto model = [](double x, std::span<const double> p) { return p[0] * std::exp(-p[1] * x); };
    NlsOptions opts;
    opts.max_iterations = 1;
    const auto r = fit_nls(model, d, {1.0, 0.1}, {"amp", "rate"}, {}, opts);
    EXPECT_FALSE(r.converged);
    EXPECT_EQ(r.iterations, 1);
    EXPECT_TRUE(std::isfinite(r.value("amp")));
}

TEST(FitNls, IntervalScalesWithReplication) {
    // Replicating one noisy record leaves the optimum unchanged, so the
    // standard error shrinks by exactly 2 sqrt(159 / 156) for 40 points
    // and one parameter.
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<DataPoint> base;
    for (int i = 1; i <= 40; ++i) {
        const double p = 0.003 * i;
        base.push_back({p, eta_sin2(8.31, p, 2.0) + noise(rng)});
    }
    auto se = [&](int copies) {
        std::vector<DataPoint> d;
        for (int c = 0; c < copies; ++c) d.insert(d.end(), base.begin(), base.end());
        return *fit_efficiency_sin2(d, 2.0).param("eta_nor").std_error;
    };
    EXPECT_NEAR(se(1) / se(4), 2.0 * std::sqrt(159.0 / 156.0), 1e-6);
}

TEST(FitLowConversion, ExactRecovery) {
    std::vector<DataPoint> d;
    for (int i = 1; i <= 8; ++i) {
        const double p = 1e-4 * i;
        d.push_back({p, eta_low_conversion_lossy(7.03, p, device_losses, 2.0)});
    }
    const auto r = fit_efficiency_low_conversion(d, device_losses, 2.0);
    EXPECT_NEAR(r.value("eta_nor"), 7.03, 1e-12);
    EXPECT_NEAR(r.r2, 1.0, 1e-12);
    EXPECT_EQ(r.residuals.size(), 5u);
}

TEST(FitLowConversion, UsesLowestPointsWhateverTheOrder) {
    std::vector<DataPoint> d{{5e-4, 0.011}, {1e-4, 0.0023}, {3e-4, 0.0062},
                             {9e-4, 0.06},  {2e-4, 0.0041}, {4e-4, 0.0089}};
    const auto a = fit_efficiency_low_conversion(d, device_losses, 2.0);
    std::reverse(d.begin(), d.end());
    const auto b = fit_efficiency_low_conversion(d, device_losses, 2.0);
    std::rotate(d.begin(), d.begin() + 2, d.end());
    const auto c = fit_efficiency_low_conversion(d, device_losses, 2.0);
    EXPECT_EQ(a.value("eta_nor"), b.value("eta_nor"));
    EXPECT_EQ(a.value("eta_nor"), c.value("eta_nor"));
}

TEST(FitLowConversion, Validation) {
    const std::vector<DataPoint> d{{1e-4, 0.002}, {2e-4, 0.004}};
    EXPECT_THROW(fit_efficiency_low_conversion(d, device_losses, 2.0, 5), ValidationError);
    const std::vector<DataPoint> zeros{{0.0, 0.0}, {0.0, 0.0}};
    EXPECT_THROW(fit_efficiency_low_conversion(zeros, device_losses, 2.0, 2), ValidationError);
}

TEST(FitNoise, ExactRecoveryBothModels) {
    const auto fixed = noise_fixed();
    for (auto kind : {NoiseModelKind::lossless, NoiseModelKind::lossy}) {
        auto gen = fixed;
        gen.a_hz_per_w_per_cm = 1e4;
        std::vector<DataPoint> d;
        for (int i = 1; i <= 12; ++i) {
            const double p = 0.01 * i;
            d.push_back({p, kind == NoiseModelKind::lossy ? noise_lossy(p, gen) : noise_lossless(p, gen)});
        }
        const auto r = fit_noise(d, fixed, kind);
        EXPECT_NEAR(r.value("a"), 1e4, 1e-8 * 1e4);
    }
}

TEST(FitNoise, ScaleEquivariant) {
    auto gen = noise_fixed();
    gen.a_hz_per_w_per_cm = 2e3;
    std::vector<DataPoint> d;
    for (int i = 1; i <= 10; ++i) d.push_back({0.01 * i, noise_lossy(0.01 * i, gen) * (1 + 0.01 * (i % 3))});
    const double a = fit_noise(d, noise_fixed(), NoiseModelKind::lossy).value("a");
    for (auto& p : d) p.y *= 7.5;
    const double b = fit_noise(d, noise_fixed(), NoiseModelKind::lossy).value("a");
    EXPECT_NEAR(b, 7.5 * a, 1e-12 * b);
}

TEST(FitNoise, LossyModelFitsLossyDataBetter) {
    auto gen = noise_fixed();
    gen.a_hz_per_w_per_cm = 1e4;
    std::vector<DataPoint> d;
    for (int i = 1; i <= 16; ++i) d.push_back({0.01 * i, noise_lossy(0.01 * i, gen)});
    const auto lossy = fit_noise(d, noise_fixed(), NoiseModelKind::lossy);
    const auto lossless = fit_noise(d, noise_fixed(), NoiseModelKind::lossless);
    EXPECT_LT(lossy.residual_norm(), lossless.residual_norm());
}

TEST(FitNoise, AllZeroPredictionsAreDegenerate) {
    const std::vector<DataPoint> d{{0.0, 1.0}, {0.0, 2.0}};
    EXPECT_THROW(fit_noise(d, noise_fixed(), NoiseModelKind::lossy), ValidationError);
}

TEST(HigherModes, Correction) {
    EXPECT_NEAR(correct_higher_modes(7.03, 0.93, 1.11), 8.390645161290323, 1e-12);
    EXPECT_THROW(correct_higher_modes(7.03, 0.0, 1.11), ValidationError);
}
