#pragma once

// Umbrella header.

#include "digitbench/bench.hpp"
#include "digitbench/classifier.hpp"
#include "digitbench/datasets.hpp"
#include "digitbench/error.hpp"
#include "digitbench/features.hpp"
#include "digitbench/grid_search.hpp"
#include "digitbench/image.hpp"
#include "digitbench/imaging.hpp"
#include "digitbench/metrics.hpp"
#include "digitbench/model_io.hpp"
#include "digitbench/report.hpp"
#include "digitbench/synthetic.hpp"
#include "digitbench/visualize.hpp"
