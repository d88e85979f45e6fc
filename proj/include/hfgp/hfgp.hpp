#pragma once

#include "hfgp/error.hpp"
#include "hfgp/numerics.hpp"
#include "hfgp/kernels.hpp"
#include "hfgp/drift.hpp"
#include "hfgp/simulate.hpp"
#include "hfgp/residuals.hpp"
#include "hfgp/moments.hpp"
#include "hfgp/optimize.hpp"
#include "hfgp/contrast.hpp"
#include "hfgp/asymptotics.hpp"
#include "hfgp/experiments.hpp"
#include "hfgp/config.hpp"
#include "hfgp/io.hpp"
