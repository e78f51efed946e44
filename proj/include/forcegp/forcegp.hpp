#pragma once

// Umbrella header for the forcegp library: physics-informed Gaussian
// process reconstruction of dynamic forces on harmonic oscillators, plus
// the simulators used to generate verification data.

#include "forcegp/errors.hpp"
#include "forcegp/gp_core.hpp"
#include "forcegp/kernels.hpp"
#include "forcegp/oscillator.hpp"
#include "forcegp/predictor.hpp"
#include "forcegp/signal.hpp"
#include "forcegp/trainer.hpp"
#include "forcegp/windsim.hpp"
