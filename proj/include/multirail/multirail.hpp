// multirail.hpp: umbrella header for the whole library.

#pragma once

#include "multirail/chain.hpp"
#include "multirail/condition.hpp"
#include "multirail/convergence.hpp"
#include "multirail/encoding.hpp"
#include "multirail/engine.hpp"
#include "multirail/io.hpp"
#include "multirail/protocol.hpp"
#include "multirail/random.hpp"
#include "multirail/scheduler.hpp"
