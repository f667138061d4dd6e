#pragma once

// Umbrella header for the two-falling-balls laboratory.

#include "fbl/analysis.hpp"
#include "fbl/dynamics.hpp"
#include "fbl/event_sim.hpp"
#include "fbl/geometry.hpp"
#include "fbl/orbit.hpp"
#include "fbl/section.hpp"
#include "fbl/symbolic.hpp"
