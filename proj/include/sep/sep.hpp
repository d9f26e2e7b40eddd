#pragma once

#include "sep/commands.hpp"
#include "sep/config.hpp"
#include "sep/diagnostics.hpp"
#include "sep/ensemble.hpp"
#include "sep/equation_of_state.hpp"
#include "sep/error.hpp"
#include "sep/grid.hpp"
#include "sep/integrator.hpp"
#include "sep/io.hpp"
#include "sep/noise.hpp"
#include "sep/poisson.hpp"
#include "sep/state.hpp"
#include "sep/steady_state.hpp"
