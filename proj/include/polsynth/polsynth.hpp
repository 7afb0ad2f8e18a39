#ifndef POLSYNTH_POLSYNTH_HPP
#define POLSYNTH_POLSYNTH_HPP

#include "polsynth/beam.hpp"
#include "polsynth/budget.hpp"
#include "polsynth/constants.hpp"
#include "polsynth/fixtures.hpp"
#include "polsynth/lattice.hpp"
#include "polsynth/monte_carlo.hpp"
#include "polsynth/noise_series.hpp"
#include "polsynth/psd.hpp"
#include "polsynth/servo.hpp"
#include "polsynth/sideband.hpp"
#include "polsynth/stokes.hpp"
#include "polsynth/storage.hpp"
#include "polsynth/transport.hpp"

#endif
