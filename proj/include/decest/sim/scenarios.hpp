#pragma once

// Canonical scenario configurations.

#include "decest/sim/config.hpp"

namespace decest::sim {

// n robots on a line; robot 0 measures its position, robot k > 0 measures
// r_k - r_{k-1}; chain graph; every robot estimates every position.
ScenarioConfig scenario_toy(int n_robots);

// Four wheeled robots in the plane; two of them see landmarks.
ScenarioConfig scenario_ground();

// Three quadcopters with IMUs, height, magnetometer, ranging tags; robot 2
// has no absolute position.
ScenarioConfig scenario_quad();

}  // namespace decest::sim
