#pragma once

// Umbrella header.

#include "ecmsim/analytic.hpp"
#include "ecmsim/cli.hpp"
#include "ecmsim/config.hpp"
#include "ecmsim/core.hpp"
#include "ecmsim/errors.hpp"
#include "ecmsim/fixtures.hpp"
#include "ecmsim/io.hpp"
#include "ecmsim/pipeline.hpp"
#include "ecmsim/schedule.hpp"
#include "ecmsim/specfun.hpp"
#include "ecmsim/stats.hpp"
#include "ecmsim/svg.hpp"
