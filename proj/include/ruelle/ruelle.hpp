#pragma once

#include "ruelle/error.hpp"
#include "ruelle/parallel.hpp"
#include "ruelle/space.hpp"
#include "ruelle/potential.hpp"
#include "ruelle/transfer.hpp"
#include "ruelle/reference.hpp"
#include "ruelle/gibbs.hpp"
#include "ruelle/maxplus.hpp"
#include "ruelle/orbits.hpp"
#include "ruelle/zerotemp.hpp"
#include "ruelle/involution.hpp"
#include "ruelle/scenarios.hpp"
#include "ruelle/acceptance.hpp"
