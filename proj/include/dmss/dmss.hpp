#pragma once

// Umbrella header for the dynamic model-size-selection engine.

#include "dmss/core.hpp"
#include "dmss/objective.hpp"
#include "dmss/prob.hpp"
#include "dmss/predictor.hpp"
#include "dmss/selector.hpp"
#include "dmss/planner.hpp"
#include "dmss/baselines.hpp"
#include "dmss/traceio.hpp"
#include "dmss/sim.hpp"
#include "dmss/config.hpp"
