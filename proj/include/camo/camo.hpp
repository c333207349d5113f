#pragma once

#include "camo/core.hpp"
#include "camo/dataset_io.hpp"
#include "camo/detector.hpp"
#include "camo/harness.hpp"
#include "camo/json_io.hpp"
#include "camo/learner.hpp"
#include "camo/objective.hpp"
#include "camo/rng.hpp"
#include "camo/solvers/beam.hpp"
#include "camo/solvers/nlp.hpp"
#include "camo/solvers/report.hpp"
#include "camo/solvers/uniform.hpp"
#include "camo/synthbench.hpp"
