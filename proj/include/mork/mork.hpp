#pragma once
// Convenience umbrella: the whole multi-order Runge-Kutta library.

#include "mork/core.hpp"
#include "mork/graph.hpp"
#include "mork/stepper.hpp"
#include "mork/methods.hpp"
#include "mork/conditions.hpp"
#include "mork/stability.hpp"
#include "mork/cli.hpp"
