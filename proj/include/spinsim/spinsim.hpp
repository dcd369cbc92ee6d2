#pragma once

#include "spinsim/errors.hpp"
#include "spinsim/operators.hpp"
#include "spinsim/spin.hpp"
#include "spinsim/hamiltonians.hpp"
#include "spinsim/magnus.hpp"
#include "spinsim/evolution.hpp"
#include "spinsim/measurement.hpp"
#include "spinsim/protocols.hpp"
#include "spinsim/config.hpp"
#include "spinsim/experiment.hpp"
