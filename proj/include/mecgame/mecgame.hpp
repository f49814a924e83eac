#pragma once

#include "mecgame/baselines.hpp"
#include "mecgame/barrier.hpp"
#include "mecgame/derivatives.hpp"
#include "mecgame/errors.hpp"
#include "mecgame/experiments.hpp"
#include "mecgame/games.hpp"
#include "mecgame/json_io.hpp"
#include "mecgame/model.hpp"
#include "mecgame/pricing.hpp"
#include "mecgame/rng.hpp"
#include "mecgame/scenario.hpp"
#include "mecgame/solver.hpp"
#include "mecgame/types.hpp"
#include "mecgame/units.hpp"
#include "mecgame/validation.hpp"
