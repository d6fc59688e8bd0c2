// Yield of a 20 mm guide with one or two random poling defects.

#include "qfcsim/qfcsim.hpp"

#include <cstdio>

int main() {
    const qfcsim::WaveguideSpec spec(2.0, 3.07);
    qfcsim::McConfig cfg;
    cfg.trials = 2000;
    cfg.seed = 7;

    for (int n = 0; n <= 3; ++n) {
        const auto est = qfcsim::success_probability(spec, n, {}, cfg);
        std::printf("N=%d  p(eta >= 0.9) = %.3f  [%.3f, %.3f]\n", n, est.p_hat, est.ci_lo,
                    est.ci_hi);
    }

    // a defect one period wide in the middle cancels the two halves
    const qfcsim::DefectMap bad({{0.5 * spec.length_um(), spec.poling_period_um()}});
    std::printf("w = period at L/2: eta(1/period) = %.2e\n",
                qfcsim::relative_efficiency(spec, bad, qfcsim::EfficiencyMode::at_nominal_q));
}
