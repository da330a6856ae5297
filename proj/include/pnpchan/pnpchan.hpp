#pragma once

/// Umbrella header for the numerical core. The JSON/CLI layer lives under pnpchan/io/.

#include "pnpchan/error.hpp"
#include "pnpchan/numerics.hpp"
#include "pnpchan/geometry.hpp"
#include "pnpchan/foliation.hpp"
#include "pnpchan/problem.hpp"
#include "pnpchan/steady_asymptotics.hpp"
#include "pnpchan/fast_dynamics.hpp"
#include "pnpchan/singular_orbit.hpp"
#include "pnpchan/mesh.hpp"
#include "pnpchan/fv_system.hpp"
#include "pnpchan/bvp_solver.hpp"
#include "pnpchan/transient_solver.hpp"
