#pragma once

#include "lanlab/cli.hpp"
#include "lanlab/config.hpp"
#include "lanlab/core.hpp"
#include "lanlab/density.hpp"
#include "lanlab/estimate.hpp"
#include "lanlab/experiment.hpp"
#include "lanlab/ftransform.hpp"
#include "lanlab/lan.hpp"
#include "lanlab/model.hpp"
#include "lanlab/parallel.hpp"
#include "lanlab/quadrature.hpp"
#include "lanlab/record_io.hpp"
#include "lanlab/rng.hpp"
#include "lanlab/simulate.hpp"
#include "lanlab/stats.hpp"
