#pragma once

#include "radarplace/ckf.hpp"
#include "radarplace/config.hpp"
#include "radarplace/dynamics.hpp"
#include "radarplace/fim.hpp"
#include "radarplace/harness.hpp"
#include "radarplace/io.hpp"
#include "radarplace/mppi.hpp"
#include "radarplace/objective.hpp"
#include "radarplace/parallel.hpp"
#include "radarplace/random.hpp"
#include "radarplace/sensing.hpp"
#include "radarplace/types.hpp"
