#pragma once

#include "potts/baselines.hpp"
#include "potts/core.hpp"
#include "potts/errors.hpp"
#include "potts/evalkit.hpp"
#include "potts/experiment.hpp"
#include "potts/gibbs.hpp"
#include "potts/io.hpp"
#include "potts/penalty.hpp"
#include "potts/potts_dp.hpp"
