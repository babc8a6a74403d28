#pragma once

#include "depas/numerics.hpp"
#include "depas/policy.hpp"
#include "depas/probability.hpp"
#include "depas/random.hpp"
#include "depas/simulator.hpp"
#include "depas/tuning.hpp"
