#pragma once

#include "analysis.hpp"
#include "circuit.hpp"
#include "epsilon.hpp"
#include "join_tree.hpp"
#include "mapsearch.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "propagation.hpp"
#include "valuation.hpp"
