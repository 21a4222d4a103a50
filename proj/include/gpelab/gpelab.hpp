#pragma once

#include "gpelab/analysis.hpp"
#include "gpelab/error.hpp"
#include "gpelab/grid.hpp"
#include "gpelab/integrator.hpp"
#include "gpelab/pipeline.hpp"
#include "gpelab/schedules.hpp"
#include "gpelab/spectral.hpp"
#include "gpelab/units.hpp"
#include "gpelab/wavefunction.hpp"
