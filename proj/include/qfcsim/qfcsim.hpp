#pragma once

#include "qfcsim/cme.hpp"
#include "qfcsim/core.hpp"
#include "qfcsim/defect_model.hpp"
#include "qfcsim/errors.hpp"
#include "qfcsim/fitting.hpp"
#include "qfcsim/loss_analysis.hpp"
#include "qfcsim/monte_carlo.hpp"
#include "qfcsim/noise_model.hpp"
#include "qfcsim/quadrature.hpp"
#include "qfcsim/rng.hpp"
#include "qfcsim/tuning.hpp"
#include "qfcsim/units.hpp"
