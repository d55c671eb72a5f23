#pragma once

#include "tcsid/error.hpp"
#include "tcsid/io.hpp"
#include "tcsid/kalman.hpp"
#include "tcsid/linalg.hpp"
#include "tcsid/random.hpp"
#include "tcsid/spectral.hpp"
#include "tcsid/state_space.hpp"
#include "tcsid/synth.hpp"
#include "tcsid/sysid.hpp"
#include "tcsid/timeseries.hpp"
#include "tcsid/trajectory.hpp"
#include "tcsid/version.hpp"
