#pragma once

#include "nlwm/radial_grid.hpp"
#include "nlwm/weights.hpp"
#include "nlwm/initial_data.hpp"
#include "nlwm/observer.hpp"
#include "nlwm/functionals.hpp"
#include "nlwm/solver.hpp"
#include "nlwm/free_wave.hpp"
#include "nlwm/config.hpp"
#include "nlwm/experiments.hpp"
#include "nlwm/report.hpp"
#include "nlwm/cli.hpp"
