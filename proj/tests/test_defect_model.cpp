#include "qfcsim/defect_model.hpp"
#include "qfcsim/rng.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace qfcsim;

namespace {

const WaveguideSpec spec20(2.0, 3.07);
constexpr double period = 3.07;

std::vector<std::pair<double, double>> pairs(const DefectMap& m) {
    std::vector<std::pair<double, double>> out;
    for (const auto& d : m) out.emplace_back(d.position_um, d.width_um);
    return out;
}

DefectMap random_map(std::uint64_t seed, int n, double length_um) {
    auto rs = RandomStream::substream(seed, 0);
    std::vector<double> xs;
    for (int i = 0; i < n; ++i) xs.push_back(length_um * rs.uniform_open());
    std::sort(xs.begin(), xs.end());
    std::vector<Defect> d;
    for (double x : xs) d.push_back({x, 30.0 * rs.uniform()});
    return DefectMap(d);
}

}  // namespace

TEST(PhaseShift, Examples) {
    EXPECT_EQ(phase_shift(1.535, period), 0.0);
    EXPECT_NEAR(phase_shift(period, period), std::numbers::pi, 1e-15);
    EXPECT_NEAR(phase_shift(12.3, period), -3.100659850285692, 1e-12);
    EXPECT_EQ(phase_shift(0.0, period), std::numbers::pi);
}

TEST(PhaseShift, PrincipalRange) {
    for (int i = 0; i < 200; ++i) {
        const double phi = phase_shift(0.173 * i, period);
        EXPECT_GT(phi, -std::numbers::pi);
        EXPECT_LE(phi, std::numbers::pi);
    }
}

TEST(PhaseShift, RejectsBadInput) {
    EXPECT_THROW(phase_shift(-1.0, period), ValidationError);
    EXPECT_THROW(phase_shift(1.0, 0.0), ValidationError);
}

TEST(DefectMap, Validation) {
    EXPECT_THROW(DefectMap({{10.0, 1.0}, {5.0, 1.0}}), ValidationError);
    EXPECT_THROW(DefectMap({{10.0, 1.0}, {10.0, 1.0}}), ValidationError);
    EXPECT_THROW(DefectMap({{-1.0, 1.0}}), ValidationError);
    EXPECT_THROW(DefectMap({{1.0, -1.0}}), ValidationError);
    const DefectMap beyond({{30000.0, 1.0}});
    EXPECT_THROW(beyond.check_within(spec20), ValidationError);
}

TEST(AmplitudeIntegral, EmptyIntegral) {
    EXPECT_EQ(std::abs(amplitude_integral(spec20, DefectMap{}, spec20.nominal_q(), 0.0)), 0.0);
}

TEST(AmplitudeIntegral, RejectsNonPositiveQ) {
    EXPECT_THROW(amplitude_integral(spec20, DefectMap{}, 0.0, 1.0), ValidationError);
    EXPECT_THROW(amplitude_integral(spec20, DefectMap{}, -0.3, 1.0), ValidationError);
}

TEST(AmplitudeIntegral, FullPeriodDefectAtMidpointCancels) {
    const DefectMap m({{0.5 * spec20.length_um(), period}});
    const auto a = amplitude_integral(spec20, m, spec20.nominal_q(), 2.0);
    const double half = 0.5 * spec20.length_um();
    EXPECT_LT(std::norm(a) / (half * half), 1e-4);
    const auto ref = oracle::amplitude(spec20.length_um(), period, pairs(m), spec20.nominal_q());
    EXPECT_LT(std::abs(a - ref) / half, 1e-9);
}

TEST(AmplitudeIntegral, MatchesQuadratureOracle) {
    const double L = spec20.length_um();
    const double scale = std::abs(amplitude_integral(spec20, DefectMap{}, spec20.nominal_q(), 2.0));
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const auto m = random_map(seed, static_cast<int>(seed % 10) + 1, L);
        for (double dq : {-3.0, 0.0, 0.7, 4.2}) {
            const double q = spec20.nominal_q() + dq / L;
            const auto got = amplitude_integral(spec20, m, q, 2.0);
            const auto want = oracle::amplitude(L, period, pairs(m), q);
            EXPECT_LT(std::abs(got - want) / scale, 1e-9) << "seed " << seed << " dq " << dq;
        }
    }
}

TEST(AmplitudeIntegral, PartialLengthMatchesOracle) {
    const WaveguideSpec s(0.5, period);
    const DefectMap m({{1000.0, 5.0}, {2500.0, 0.0}});
    const double scale = 0.5 * s.length_um();
    const double q = s.nominal_q() + 0.3 / s.length_um();
    const auto got = amplitude_integral(s, m, q, 0.3);
    const auto want = oracle::amplitude(3000.0, period, pairs(m), q);
    EXPECT_LT(std::abs(got - want) / scale, 1e-9);
}

TEST(AmplitudeIntegral, WidthPeriodicity) {
    const DefectMap a({{5000.0, 4.0}, {12000.0, 1.0}});
    const DefectMap b({{5000.0, 4.0 + period}, {12000.0, 1.0 + 2 * period}});
    const double q0 = spec20.nominal_q();
    const auto ca = tuning_curve(spec20, a, q0 - 5e-4, q0 + 5e-4, 101);
    const auto cb = tuning_curve(spec20, b, q0 - 5e-4, q0 + 5e-4, 101);
    for (std::size_t i = 0; i < ca.relative_eta.size(); ++i)
        EXPECT_NEAR(ca.relative_eta[i], cb.relative_eta[i], 1e-12);
}

TEST(AmplitudeIntegral, TranslationByWholePeriodsWithBalancedPhases) {
    // phases cancel pairwise, so moving the pair by whole periods only
    // trades grating between the two outer segments of equal phase
    const double x0 = 2000.0 * period;
    const DefectMap a({{x0, 0.5 * period + 0.8}, {x0 + 900 * period, 0.5 * period - 0.8}});
    const double shift = 321 * period;
    const DefectMap b({{x0 + shift, 0.5 * period + 0.8}, {x0 + 900 * period + shift, 0.5 * period - 0.8}});
    const double q0 = spec20.nominal_q();
    const double ma = std::abs(amplitude_integral(spec20, a, q0, 2.0));
    const double mb = std::abs(amplitude_integral(spec20, b, q0, 2.0));
    EXPECT_NEAR(ma, mb, 1e-9 * ma);
}

TEST(TuningCurve, IdealCurveSymmetricUpToCounterRotatingTerm) {
    // The sine carrier adds a term rotating at 1/period + q with modulus at
    // most 1/(2 pi (1/period + q)). Only that term breaks the mirror symmetry.
    const double L = spec20.length_um();
    const double q0 = spec20.nominal_q();
    const double two_pi = 2.0 * std::numbers::pi;
    for (double u : {0.25, 0.5, 1.43, 2.5, 3.5, 4.5, 5.0}) {
        const double qp = q0 + u / L, qm = q0 - u / L;
        const double plus = std::abs(amplitude_integral(spec20, DefectMap{}, qp, 2.0));
        const double minus = std::abs(amplitude_integral(spec20, DefectMap{}, qm, 2.0));
        const double bound = 1.0 / (two_pi * (q0 + qp)) + 1.0 / (two_pi * (q0 + qm));
        EXPECT_LE(std::abs(plus - minus), bound + 1e-9 * plus) << u;
        // the same asymmetry is present in the independent quadrature
        const double oplus = std::abs(oracle::amplitude(L, period, {}, qp));
        const double ominus = std::abs(oracle::amplitude(L, period, {}, qm));
        EXPECT_NEAR(plus - minus, oplus - ominus, 1e-12 * L) << u;
    }
}

TEST(TuningCurve, HalfPeriodDefectIsInvisible) {
    const DefectMap half({{0.5 * spec20.length_um(), 0.5 * period}});
    const double q0 = spec20.nominal_q();
    const auto c0 = tuning_curve(spec20, DefectMap{}, q0 - 5e-4, q0 + 5e-4, 201);
    const auto c1 = tuning_curve(spec20, half, q0 - 5e-4, q0 + 5e-4, 201);
    for (std::size_t i = 0; i < c0.relative_eta.size(); ++i)
        EXPECT_NEAR(c0.relative_eta[i], c1.relative_eta[i], 1e-12);
}

TEST(TuningCurve, IdealSummary) {
    const double L = spec20.length_um();
    const double q0 = spec20.nominal_q();
    const auto c = tuning_curve(spec20, DefectMap{}, q0 - 10 / L, q0 + 10 / L, 2001);
    const auto s = summarize(c);
    EXPECT_NEAR(s.peak_value, 1.0, 1e-6);
    EXPECT_NEAR(s.peak_q, q0, 0.02 / L);
    // sinc^2 FWHM is 0.8859 / L
    EXPECT_NEAR(s.fwhm * L, 0.88589, 2e-3);
}

TEST(TuningCurve, Validation) {
    EXPECT_THROW(tuning_curve(spec20, DefectMap{}, 0.4, 0.3, 10), ValidationError);
    EXPECT_THROW(tuning_curve(spec20, DefectMap{}, 0.3, 0.4, 1), ValidationError);
}

TEST(RelativeEfficiency, TrivialMaps) {
    for (auto mode : {EfficiencyMode::at_nominal_q, EfficiencyMode::peak_in_window}) {
        EXPECT_NEAR(relative_efficiency(spec20, DefectMap{}, mode), 1.0, 1e-9);
        const DefectMap half({{7000.0, 0.5 * period}});
        EXPECT_NEAR(relative_efficiency(spec20, half, mode), 1.0, 1e-9);
    }
}

TEST(RelativeEfficiency, FullPeriodDefectSplitsThePeak) {
    const DefectMap m({{0.5 * spec20.length_um(), period}});
    EXPECT_LT(relative_efficiency(spec20, m, EfficiencyMode::at_nominal_q), 1e-4);

    // peak_in_window returns the larger side lobe; check against a fine scan
    const double L = spec20.length_um();
    const double q0 = spec20.nominal_q();
    const double ref = ideal_reference(spec20).peak_power;
    double scan = 0.0;
    for (int i = 0; i <= 20000; ++i) {
        const double q = q0 + (-10.0 + 20.0 * i / 20000) / L;
        scan = std::max(scan, std::norm(amplitude_integral(spec20, m, q, 2.0)) / ref);
    }
    const double got = relative_efficiency(spec20, m, EfficiencyMode::peak_in_window);
    EXPECT_GE(got, scan - 1e-12);
    EXPECT_NEAR(got, scan, 1e-6);
    EXPECT_GT(got, 0.3);
    EXPECT_LT(got, 0.6);
}

TEST(Evolution, GridIncludesDefectsAndEndsAtL) {
    const DefectMap m({{1234.5, 2.0}, {15000.0, 9.0}});
    const auto ev = efficiency_evolution(spec20, m, spec20.nominal_q(), 11);
    EXPECT_EQ(ev.size(), 13u);
    EXPECT_DOUBLE_EQ(ev.front().z_cm, 0.0);
    EXPECT_DOUBLE_EQ(ev.back().z_cm, 2.0);
    EXPECT_EQ(ev.front().relative_eta, 0.0);
    EXPECT_NEAR(ev.back().relative_eta,
                relative_efficiency(spec20, m, EfficiencyMode::at_nominal_q), 1e-12);
}

TEST(Evolution, IdealGrowsQuadratically) {
    const auto ev = efficiency_evolution(spec20, DefectMap{}, spec20.nominal_q(), 5);
    for (const auto& s : ev) EXPECT_NEAR(s.relative_eta, (s.z_cm / 2.0) * (s.z_cm / 2.0), 1e-4);
}
