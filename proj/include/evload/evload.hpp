#pragma once

// Umbrella header for the EV charging load-balancing library: softmin
// routing model, equilibrium dual solver, fluid dynamics, social optimum,
// stochastic simulator, and spatial instance builders.

#include "evload/config.hpp"
#include "evload/csv.hpp"
#include "evload/demand.hpp"
#include "evload/dynamics.hpp"
#include "evload/equilibrium.hpp"
#include "evload/instance.hpp"
#include "evload/matrix.hpp"
#include "evload/model.hpp"
#include "evload/sim.hpp"
#include "evload/social.hpp"
#include "evload/softmin.hpp"
#include "evload/spatial.hpp"
