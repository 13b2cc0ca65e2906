#pragma once

/// @file magsuture.hpp
/// @brief Umbrella header.

#include "magsuture/config.hpp"
#include "magsuture/control.hpp"
#include "magsuture/core.hpp"
#include "magsuture/dbscan.hpp"
#include "magsuture/dynamics.hpp"
#include "magsuture/experiment.hpp"
#include "magsuture/localization.hpp"
#include "magsuture/magnetics.hpp"
#include "magsuture/metrics.hpp"
#include "magsuture/pgm.hpp"
#include "magsuture/random.hpp"
#include "magsuture/ransac.hpp"
#include "magsuture/raster.hpp"
#include "magsuture/synth_vision.hpp"
#include "magsuture/trace_io.hpp"
