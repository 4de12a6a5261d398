#pragma once

#include "camirada/coexpr.hpp"
#include "camirada/enrich.hpp"
#include "camirada/error.hpp"
#include "camirada/evalroc.hpp"
#include "camirada/netcore.hpp"
#include "camirada/nullmodel.hpp"
#include "camirada/pcombine.hpp"
#include "camirada/pipeline.hpp"
#include "camirada/propagate.hpp"
#include "camirada/special.hpp"
