#pragma once

#include "mqigame/core.hpp"
#include "mqigame/model.hpp"
#include "mqigame/structure.hpp"
#include "mqigame/lifting.hpp"
#include "mqigame/static_game.hpp"
#include "mqigame/strategy_maps.hpp"
#include "mqigame/equilibrium.hpp"
#include "mqigame/simulate.hpp"
#include "mqigame/instances.hpp"
#include "mqigame/repro.hpp"
