#pragma once

#include "anderson/errors.hpp"
#include "anderson/random.hpp"
#include "anderson/parallel.hpp"
#include "anderson/partition.hpp"
#include "anderson/potential.hpp"
#include "anderson/operator.hpp"
#include "anderson/solver.hpp"
#include "anderson/landscape.hpp"
#include "anderson/stochastic.hpp"
#include "anderson/runstats.hpp"
#include "anderson/experiments.hpp"
#include "anderson/bifurcation.hpp"
