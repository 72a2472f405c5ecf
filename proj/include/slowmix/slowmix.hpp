#pragma once

// Umbrella header for the slowmix laboratory: random alternating shear flows
// on the 2-torus, pseudo-spectral advection-diffusion, mixing and dissipation
// measurements, two-point chain diagnostics, and closed-form bounds.

#include "advdiff.hpp"
#include "bounds.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "lab.hpp"
#include "mixmeter.hpp"
#include "profile.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "torus.hpp"
#include "transport.hpp"
#include "twopoint.hpp"
