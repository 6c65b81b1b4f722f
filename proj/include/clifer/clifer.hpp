#pragma once

#include "baseline.hpp"
#include "datasets.hpp"
#include "dual_memory.hpp"
#include "errors.hpp"
#include "expression.hpp"
#include "gwr.hpp"
#include "harness.hpp"
#include "imagination.hpp"
#include "report.hpp"
#include "snapshot.hpp"
#include "stats.hpp"
