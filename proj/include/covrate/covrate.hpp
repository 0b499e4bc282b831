#pragma once

#include "covrate/error.hpp"
#include "covrate/fusion.hpp"
#include "covrate/gaussian_model.hpp"
#include "covrate/rdf.hpp"
#include "covrate/rng.hpp"
#include "covrate/root_finding.hpp"
#include "covrate/sim.hpp"
#include "covrate/special_cases.hpp"
#include "covrate/spd.hpp"
#include "covrate/json_io.hpp"
#include "covrate/experiments.hpp"
