#pragma once

#include "stocheq/equivalence.hpp"
#include "stocheq/errors.hpp"
#include "stocheq/io.hpp"
#include "stocheq/montecarlo.hpp"
#include "stocheq/numlin.hpp"
#include "stocheq/reduction.hpp"
#include "stocheq/relations.hpp"
#include "stocheq/sysmodel.hpp"
