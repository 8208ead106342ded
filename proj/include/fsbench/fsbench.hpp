#pragma once

#include "fsbench/classifiers.hpp"
#include "fsbench/common.hpp"
#include "fsbench/data.hpp"
#include "fsbench/embedded.hpp"
#include "fsbench/engine.hpp"
#include "fsbench/filters.hpp"
#include "fsbench/information.hpp"
#include "fsbench/lasso.hpp"
#include "fsbench/logistic.hpp"
#include "fsbench/methods.hpp"
#include "fsbench/metrics.hpp"
#include "fsbench/parallel.hpp"
#include "fsbench/prefilter.hpp"
#include "fsbench/report.hpp"
#include "fsbench/selection.hpp"
#include "fsbench/simulation.hpp"
#include "fsbench/stats.hpp"
#include "fsbench/tree.hpp"
#include "fsbench/wrappers.hpp"
