#pragma once

#include "config.hpp"
#include "errors.hpp"
#include "estimates.hpp"
#include "interval.hpp"
#include "io.hpp"
#include "lattice.hpp"
#include "measures.hpp"
#include "processes.hpp"
#include "random.hpp"
#include "runner.hpp"
#include "spectral.hpp"
#include "stats.hpp"
#include "version.hpp"
