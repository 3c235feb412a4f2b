#pragma once

/// Umbrella header.

#include "asph/adaptivity.hpp"
#include "asph/dispersion.hpp"
#include "asph/integrator.hpp"
#include "asph/io.hpp"
#include "asph/kernel.hpp"
#include "asph/neighbors.hpp"
#include "asph/particles.hpp"
#include "asph/run.hpp"
#include "asph/scenarios.hpp"
#include "asph/sph_core.hpp"
#include "asph/types.hpp"
