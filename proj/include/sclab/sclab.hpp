#pragma once

// Umbrella header for the whole library.

#include "error.hpp"
#include "grid.hpp"
#include "radial_field.hpp"
#include "jet.hpp"
#include "numerology.hpp"
#include "ground_state.hpp"
#include "linop.hpp"
#include "profiles.hpp"
#include "param_flow.hpp"
#include "selfsim.hpp"
#include "validation.hpp"
#include "nls_sim.hpp"
#include "io.hpp"
