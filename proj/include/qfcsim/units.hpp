#pragma once

// Internal units: cm, W, cm^-1, W^-1 cm^-2. User-facing values (mm, um, mW,
// %/(W cm^2)) are converted once at the interface boundary.

namespace qfcsim::units {

constexpr double um_per_cm = 1.0e4;

constexpr double mm_to_cm(double mm) { return mm / 10.0; }
constexpr double cm_to_mm(double cm) { return cm * 10.0; }
constexpr double um_to_cm(double um) { return um / um_per_cm; }
constexpr double cm_to_um(double cm) { return cm * um_per_cm; }
constexpr double mw_to_w(double mw) { return mw / 1000.0; }
constexpr double w_to_mw(double w) { return w * 1000.0; }

/// %/(W cm^2) -> W^-1 cm^-2
constexpr double percent_eta_to_internal(double pct) { return pct / 100.0; }
constexpr double internal_eta_to_percent(double eta) { return eta * 100.0; }

constexpr double nm_to_pm(double nm) { return nm * 1000.0; }

}  // namespace qfcsim::units
