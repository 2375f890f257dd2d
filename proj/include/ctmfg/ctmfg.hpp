#pragma once

#include "ctmfg/algorithms.hpp"
#include "ctmfg/errors.hpp"
#include "ctmfg/games.hpp"
#include "ctmfg/maps.hpp"
#include "ctmfg/metrics.hpp"
#include "ctmfg/model.hpp"
#include "ctmfg/ode.hpp"
