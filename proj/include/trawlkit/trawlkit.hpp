// SPDX-License-Identifier: Apache-2.0
//! \file trawlkit/trawlkit.hpp
#pragma once

#define TRAWLKIT_VERSION "0.1.0"

#include "ambit.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "kernel_vol.hpp"
#include "levy.hpp"
#include "numeric_inversion.hpp"
#include "rng.hpp"
#include "sim_cpp.hpp"
#include "sim_grid.hpp"
#include "sim_slice.hpp"
#include "stats.hpp"
#include "trawl_geometry.hpp"
