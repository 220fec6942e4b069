#pragma once

#include "analysis.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "jones.hpp"
#include "montecarlo.hpp"
#include "quantum.hpp"
#include "rng.hpp"
#include "scenario.hpp"
#include "scheme.hpp"
