#pragma once

// Solver core. The JSON configuration layer (config.hpp) and the experiment
// harness (harness.hpp) are included separately.
#include "pxlap/errors.hpp"
#include "pxlap/grid.hpp"
#include "pxlap/field.hpp"
#include "pxlap/problem.hpp"
#include "pxlap/truncation.hpp"
#include "pxlap/function_spaces.hpp"
#include "pxlap/spatial_operator.hpp"
#include "pxlap/elliptic_step.hpp"
#include "pxlap/time_march.hpp"
#include "pxlap/monotone_scheme.hpp"
#include "pxlap/estimates.hpp"
