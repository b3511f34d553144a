#pragma once

#include "epihaz/chain_binomial.hpp"
#include "epihaz/csv.hpp"
#include "epihaz/em.hpp"
#include "epihaz/harness.hpp"
#include "epihaz/hazard.hpp"
#include "epihaz/households.hpp"
#include "epihaz/math.hpp"
#include "epihaz/nelson_aalen.hpp"
#include "epihaz/record.hpp"
#include "epihaz/risk_set.hpp"
#include "epihaz/rng.hpp"
#include "epihaz/simulate.hpp"
#include "epihaz/smoothing.hpp"
#include "epihaz/step_estimate.hpp"
#include "epihaz/ws_network.hpp"
