#pragma once

#include "nete/error.hpp"
#include "nete/rng.hpp"
#include "nete/evt.hpp"
#include "nete/samplers.hpp"
#include "nete/forest.hpp"
#include "nete/nuisance.hpp"
#include "nete/table.hpp"
#include "nete/estimators.hpp"
#include "nete/datagen.hpp"
#include "nete/io.hpp"
#include "nete/bench.hpp"
