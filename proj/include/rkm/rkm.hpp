#pragma once

// Umbrella header: exact-rational LP rounding pipelines for robust
// k-median/k-means, matroid median (partition matroids) and knapsack median.

#include "rkm/common.hpp"
#include "rkm/constraints.hpp"
#include "rkm/driver.hpp"
#include "rkm/finalize.hpp"
#include "rkm/generators.hpp"
#include "rkm/instance.hpp"
#include "rkm/iterround.hpp"
#include "rkm/json_io.hpp"
#include "rkm/lp.hpp"
#include "rkm/oracle.hpp"
#include "rkm/preprocess.hpp"
#include "rkm/variants.hpp"
