#pragma once

#include "anonmech/errors.hpp"
#include "anonmech/random.hpp"
#include "anonmech/distributions.hpp"
#include "anonmech/mechanisms.hpp"
#include "anonmech/pricing.hpp"
#include "anonmech/posterior.hpp"
#include "anonmech/instances.hpp"
#include "anonmech/simulate.hpp"
#include "anonmech/verify.hpp"
#include "anonmech/io.hpp"
