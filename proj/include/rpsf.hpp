#pragma once

// Umbrella header for the whole library.
#include "rpsf/config.hpp"
#include "rpsf/convolve.hpp"
#include "rpsf/depth.hpp"
#include "rpsf/errors.hpp"
#include "rpsf/fft.hpp"
#include "rpsf/grid.hpp"
#include "rpsf/io.hpp"
#include "rpsf/log.hpp"
#include "rpsf/optics.hpp"
#include "rpsf/optimize.hpp"
#include "rpsf/parallel.hpp"
#include "rpsf/phase_mask.hpp"
#include "rpsf/psf_stack.hpp"
#include "rpsf/restore.hpp"
#include "rpsf/scene.hpp"
#include "rpsf/sensor.hpp"
#include "rpsf/stack_io.hpp"
#include "rpsf/synthetic.hpp"
