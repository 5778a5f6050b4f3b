#pragma once

// Umbrella header: distributed best-subset selection for sparse linear
// regression. Pulls in the quadratic objectives, the splicing solver, the
// simulated cluster with communication metering, the two-stage fixed-s
// procedure with GIC sparsity selection, synthetic data generation and the
// recovery metrics.

#include "dbess/cluster.hpp"
#include "dbess/datagen.hpp"
#include "dbess/driver.hpp"
#include "dbess/errors.hpp"
#include "dbess/experiment.hpp"
#include "dbess/index_set.hpp"
#include "dbess/io.hpp"
#include "dbess/metrics.hpp"
#include "dbess/parallel.hpp"
#include "dbess/quadratic.hpp"
#include "dbess/rng.hpp"
#include "dbess/splicing.hpp"
