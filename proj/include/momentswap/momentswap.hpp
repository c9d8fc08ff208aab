#pragma once

#include "momentswap/accumulate.hpp"
#include "momentswap/black.hpp"
#include "momentswap/config.hpp"
#include "momentswap/contracts.hpp"
#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"
#include "momentswap/market_data.hpp"
#include "momentswap/philox.hpp"
#include "momentswap/pipeline.hpp"
#include "momentswap/qp.hpp"
#include "momentswap/report.hpp"
#include "momentswap/series.hpp"
#include "momentswap/sim.hpp"
#include "momentswap/stats.hpp"
#include "momentswap/surface.hpp"
#include "momentswap/svg.hpp"
#include "momentswap/swaps.hpp"
