#pragma once

#include "fgmx/copula.hpp"
#include "fgmx/dependence.hpp"
#include "fgmx/error.hpp"
#include "fgmx/expr.hpp"
#include "fgmx/func1d.hpp"
#include "fgmx/io.hpp"
#include "fgmx/measures.hpp"
#include "fgmx/quadrature.hpp"
#include "fgmx/random.hpp"
#include "fgmx/sampler.hpp"
#include "fgmx/stats.hpp"
#include "fgmx/subfamilies.hpp"
