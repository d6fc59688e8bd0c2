#include "qfcsim/cme.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace qfcsim;

namespace {

CmeParams lossless(double eta_nor, double pump_w) {
    CmeParams p;
    p.eta_nor = eta_nor;
    p.length_cm = 2.0;
    p.pump_power_w = pump_w;
    return p;
}

// pump power giving sqrt(eta_nor P) L = gl
double pump_for(double gl, double eta_nor, double length) {
    const double g = gl / length;
    return g * g / eta_nor;
}

}  // namespace

TEST(Cme, QuarterPeriodFullConversion) {
    const auto sol = integrate_cme(lossless(7.0, pump_for(0.5 * std::numbers::pi, 7.0, 2.0)));
    EXPECT_NEAR(sol.eta_int(), 1.0, 1e-6);
}

TEST(Cme, HalfPeriodBackConversion) {
    const auto sol = integrate_cme(lossless(7.0, pump_for(std::numbers::pi, 7.0, 2.0)));
    EXPECT_LE(sol.eta_int(), 1e-6);
}

TEST(Cme, LosslessMatchesSin2) {
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double gl = 2.0 * std::numbers::pi * i / 49;
        const double p = pump_for(gl, 7.0, 2.0);
        const double eta = integrate_cme(lossless(7.0, p)).eta_int();
        worst = std::max(worst, std::abs(eta - eta_sin2(7.0, p, 2.0)));
    }
    EXPECT_LE(worst, 1e-6);
}

TEST(Cme, ManleyRoweWithoutLoss) {
    CmeParams p = lossless(9.0, 0.05);
    p.signal_power_w = 0.02;  // strong signal so the pump depletes
    const auto sol = integrate_cme(p);
    const double n0 = sol.trajectory.front().flux1() + sol.trajectory.front().flux3();
    for (const auto& s : sol.trajectory) EXPECT_NEAR(s.flux1() + s.flux3(), n0, 1e-8 * n0);
    EXPECT_GT(sol.end().flux2(), sol.trajectory.front().flux2());
}

TEST(Cme, EqualSignalLossesCancelAtLosslessPump) {
    CmeParams p = lossless(7.0, pump_for(0.5 * std::numbers::pi, 7.0, 2.0));
    p.losses = LossSet(0.15, 0.0, 0.15);
    EXPECT_NEAR(integrate_cme(p).eta_int(), 1.0, 1e-4);
}

TEST(Cme, RefinementDeltasShrink) {
    CmeParams p = lossless(14.45, 0.052);
    p.losses = LossSet(0.22, 0.20, 0.12);
    const auto sol = integrate_cme(p, 4);
    ASSERT_GE(sol.endpoint_deltas.size(), 2u);
    for (std::size_t i = 1; i < sol.endpoint_deltas.size(); ++i)
        EXPECT_LT(sol.endpoint_deltas[i], sol.endpoint_deltas[i - 1]);
    EXPECT_LT(sol.endpoint_deltas.back(), cme_convergence_tol);
    EXPECT_EQ(sol.trajectory.size(), static_cast<std::size_t>(sol.steps) + 1);
}

TEST(Cme, LowConversionAgreesWithClosedForm) {
    const LossSet losses(0.22, 0.20, 0.12);
    CmeParams p;
    p.eta_nor = 7.03;
    p.losses = losses;
    for (double mw : {0.1, 0.2, 0.3, 0.5}) {
        p.pump_power_w = mw * 1e-3;
        const double eta = integrate_cme(p).eta_int();
        const double p_out = p.pump_power_w * std::exp(-0.20 * 2.0);
        const double closed = eta_low_conversion_lossy(7.03, p_out, losses, 2.0);
        ASSERT_LE(closed, 0.02);
        EXPECT_NEAR(eta, closed, 0.02 * closed) << mw;
    }
}

TEST(Cme, ZeroPumpZeroEfficiency) {
    CmeParams p = lossless(7.0, 0.0);
    const auto curve = internal_efficiency_curve(p, {0.0, 0.01});
    EXPECT_EQ(curve[0].eta_int, 0.0);
    EXPECT_GT(curve[1].eta_int, 0.0);
}

TEST(Cme, NonConvergenceReportsLastEndpoints) {
    CmeParams p = lossless(2.5e10, 0.1);  // gL = 1e5
    try {
        integrate_cme(p, 1);
        FAIL() << "expected IntegrationFailure";
    } catch (const IntegrationFailure& e) {
        EXPECT_NE(e.previous(), e.last());
    }
}

TEST(Cme, Validation) {
    EXPECT_THROW(integrate_cme(lossless(-1.0, 0.01)), ValidationError);
    CmeParams p = lossless(7.0, 0.01);
    p.signal_power_w = 0.0;
    EXPECT_THROW(internal_efficiency_curve(p, {0.01}), ValidationError);
    p = lossless(7.0, 0.01);
    p.wavelengths = {393, 527, 1400};
    EXPECT_THROW(integrate_cme(p), ValidationError);
}

TEST(ClosedForms, Sin2) {
    EXPECT_DOUBLE_EQ(eta_sin2(7.03, 0.0, 2.0), 0.0);
    EXPECT_NEAR(eta_sin2(7.03, 0.052, 2.0), 0.8748689779909794, 1e-14);
    const double p = pump_for(0.5 * std::numbers::pi, 7.03, 2.0);
    EXPECT_NEAR(eta_sin2(7.03, p, 2.0), 1.0, 1e-15);
}

TEST(ClosedForms, LowConversionGain) {
    const LossSet device(0.22, 0.20, 0.12);
    EXPECT_NEAR(low_conversion_gain(device, 2.0), 5.440052677266790, 1e-12);
    EXPECT_NEAR(eta_low_conversion_lossy(7.03, 1e-3, device, 2.0), 0.03824357032118553, 1e-15);
}

TEST(ClosedForms, LowConversionLimitIsContinuous) {
    const LossSet zero(0.1, 0.1, 0.2);
    EXPECT_DOUBLE_EQ(low_conversion_gain(zero, 2.0), 4.0);
    const LossSet tiny(0.1, 0.1, 0.2 - 2e-9);
    EXPECT_NEAR(low_conversion_gain(tiny, 2.0), 4.0, 1e-10 * 4.0);
    EXPECT_NEAR(eta_low_conversion_lossy(7.0, 1e-3, zero, 2.0), 7.0 * 1e-3 * 4.0, 1e-15);
}
