#pragma once

#include "finsler/error.hpp"
#include "finsler/geometry.hpp"
#include "finsler/jet.hpp"
#include "finsler/expr.hpp"
#include "finsler/norms.hpp"
#include "finsler/metrics.hpp"
#include "finsler/spec_format.hpp"
#include "finsler/parallel.hpp"
#include "finsler/flow.hpp"
#include "finsler/volume.hpp"
#include "finsler/decompose.hpp"
