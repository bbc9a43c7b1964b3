#ifndef RISKPOOL_RISKPOOL_HPP
#define RISKPOOL_RISKPOOL_HPP

#include "riskpool/admissibility.hpp"
#include "riskpool/aggregation.hpp"
#include "riskpool/applications.hpp"
#include "riskpool/decision.hpp"
#include "riskpool/errors.hpp"
#include "riskpool/estimators.hpp"
#include "riskpool/rng.hpp"
#include "riskpool/simplex.hpp"

#endif // RISKPOOL_RISKPOOL_HPP
