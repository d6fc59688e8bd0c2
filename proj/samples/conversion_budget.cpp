// Internal efficiency of a lossy 2 cm converter and the resulting system budget.

#include "qfcsim/qfcsim.hpp"

#include <cstdio>
#include <vector>

int main() {
    qfcsim::CmeParams p;
    p.eta_nor = 14.45;  // W^-1 cm^-2
    p.losses = qfcsim::LossSet(0.22, 0.20, 0.12);
    p.length_cm = 2.0;

    std::vector<double> pumps;
    for (int mw = 10; mw <= 100; mw += 10) pumps.push_back(mw * 1e-3);

    const qfcsim::ThroughputBudget budget{0.49, 0.80, 0.79, 1.0};
    for (const auto& pt : qfcsim::internal_efficiency_curve(p, pumps))
        std::printf("P = %5.1f mW  eta_int = %.3f  eta_ext = %.3f\n", pt.pump_power_w * 1e3,
                    pt.eta_int, qfcsim::external_efficiency(budget, pt.eta_int));
}
