#pragma once

#include "uam/airspace_grid.hpp"
#include "uam/error.hpp"
#include "uam/experiment.hpp"
#include "uam/fleet_scheduler.hpp"
#include "uam/geometry.hpp"
#include "uam/io.hpp"
#include "uam/occupancy.hpp"
#include "uam/risk_model.hpp"
#include "uam/soa.hpp"
#include "uam/spline.hpp"
#include "uam/track_planner.hpp"
