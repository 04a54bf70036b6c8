#pragma once

#include "acquisition.hpp"
#include "distflow.hpp"
#include "gp.hpp"
#include "io.hpp"
#include "network.hpp"
#include "random.hpp"
#include "report.hpp"
#include "risk.hpp"
#include "scenario.hpp"
#include "solvers.hpp"
