#pragma once

// Umbrella header for the hybrid DRAM+NVM page cache modelling toolkit.

#include "hybridcache/content.hpp"
#include "hybridcache/core_model.hpp"
#include "hybridcache/errors.hpp"
#include "hybridcache/exact_oracle.hpp"
#include "hybridcache/explorer.hpp"
#include "hybridcache/latency.hpp"
#include "hybridcache/meanfield.hpp"
#include "hybridcache/rng.hpp"
#include "hybridcache/simulator.hpp"
#include "hybridcache/workload.hpp"
