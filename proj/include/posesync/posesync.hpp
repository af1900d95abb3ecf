#pragma once

// Umbrella header: geometric hybrid feedback for global pose
// synchronization of rigid-body networks on SE(3).

#include "posesync/config.hpp"
#include "posesync/control.hpp"
#include "posesync/errors.hpp"
#include "posesync/graph.hpp"
#include "posesync/hybrid.hpp"
#include "posesync/io.hpp"
#include "posesync/lie.hpp"
#include "posesync/montecarlo.hpp"
#include "posesync/oracles.hpp"
#include "posesync/potential.hpp"
#include "posesync/sampling.hpp"
