#pragma once

#include "hierarg/discrete_rg.hpp"
#include "hierarg/equilibria.hpp"
#include "hierarg/error.hpp"
#include "hierarg/grid_function.hpp"
#include "hierarg/init_expression.hpp"
#include "hierarg/io.hpp"
#include "hierarg/rg_flow.hpp"
#include "hierarg/stability.hpp"
#include "hierarg/transforms.hpp"
