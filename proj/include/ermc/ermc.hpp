#pragma once

#include "ermc/automaton.hpp"
#include "ermc/cfa.hpp"
#include "ermc/cpa.hpp"
#include "ermc/domains.hpp"
#include "ermc/expr.hpp"
#include "ermc/feasibility.hpp"
#include "ermc/interp.hpp"
#include "ermc/oracle.hpp"
#include "ermc/parser.hpp"
#include "ermc/report.hpp"
#include "ermc/symbolic.hpp"
#include "ermc/verify.hpp"
