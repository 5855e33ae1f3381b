#pragma once

// Stationary mean field equilibria for finite state and action games whose
// transition rates and rewards depend on the population distribution.

#include "mfg/ctmdp.hpp"
#include "mfg/equilibrium.hpp"
#include "mfg/equilibrium_io.hpp"
#include "mfg/model.hpp"
#include "mfg/model_io.hpp"
#include "mfg/models.hpp"
#include "mfg/polynomial.hpp"
#include "mfg/simplex_qp.hpp"
#include "mfg/stationary.hpp"
#include "mfg/types.hpp"
