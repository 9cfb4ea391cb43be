#pragma once

#include "ptychotomo/baseline.hpp"
#include "ptychotomo/config.hpp"
#include "ptychotomo/errors.hpp"
#include "ptychotomo/experiment.hpp"
#include "ptychotomo/fft.hpp"
#include "ptychotomo/forward_model.hpp"
#include "ptychotomo/geometry.hpp"
#include "ptychotomo/grid.hpp"
#include "ptychotomo/io.hpp"
#include "ptychotomo/metrics.hpp"
#include "ptychotomo/operators.hpp"
#include "ptychotomo/phantom.hpp"
#include "ptychotomo/random.hpp"
#include "ptychotomo/solver.hpp"
