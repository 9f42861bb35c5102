#pragma once

#include "resfield/bench.hpp"
#include "resfield/covmodels.hpp"
#include "resfield/error.hpp"
#include "resfield/graph_io.hpp"
#include "resfield/metric_graph.hpp"
#include "resfield/networks.hpp"
#include "resfield/report_io.hpp"
#include "resfield/resistance.hpp"
#include "resfield/rng.hpp"
#include "resfield/simulate.hpp"
#include "resfield/stats.hpp"
#include "resfield/text.hpp"
