#pragma once

#include "stackelberg/errors.hpp"
#include "stackelberg/model.hpp"
#include "stackelberg/ode.hpp"
#include "stackelberg/riccati.hpp"
#include "stackelberg/closed_loop.hpp"
#include "stackelberg/filter.hpp"
#include "stackelberg/solver.hpp"
#include "stackelberg/noise.hpp"
#include "stackelberg/parallel.hpp"
#include "stackelberg/simulate.hpp"
#include "stackelberg/equilibrium.hpp"
#include "stackelberg/costs.hpp"
#include "stackelberg/io.hpp"
#include "stackelberg/verify.hpp"
