#pragma once

#include "conres/types.hpp"
#include "conres/contact_plan.hpp"
#include "conres/orbital.hpp"
#include "conres/temporal_graph.hpp"
#include "conres/routing.hpp"
#include "conres/satb.hpp"
#include "conres/failure.hpp"
#include "conres/report.hpp"
#include "conres/scenario.hpp"
