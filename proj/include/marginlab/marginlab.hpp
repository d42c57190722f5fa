#pragma once

#include "marginlab/balancing.hpp"
#include "marginlab/bounds.hpp"
#include "marginlab/config.hpp"
#include "marginlab/csv.hpp"
#include "marginlab/errors.hpp"
#include "marginlab/experiments.hpp"
#include "marginlab/linalg.hpp"
#include "marginlab/margin.hpp"
#include "marginlab/rng.hpp"
#include "marginlab/sets.hpp"
#include "marginlab/stats.hpp"
#include "marginlab/version.hpp"
