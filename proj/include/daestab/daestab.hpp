#pragma once

// Rest-point analysis of semi-explicit DAE systems A dx/dt = F(x,u),
// 0 = G(x,u): stability classification, certified basin radius, trajectory
// integration with blow-up detection, successive approximations, and
// branch enumeration for degenerate constraints.

#include "daestab/branching.hpp"
#include "daestab/dynamics.hpp"
#include "daestab/eigen.hpp"
#include "daestab/errors.hpp"
#include "daestab/expm.hpp"
#include "daestab/expr.hpp"
#include "daestab/integrate.hpp"
#include "daestab/matrix.hpp"
#include "daestab/polyroots.hpp"
#include "daestab/problem.hpp"
#include "daestab/quadrature.hpp"
#include "daestab/reduction.hpp"
#include "daestab/report.hpp"
#include "daestab/rng.hpp"
#include "daestab/stability.hpp"
#include "daestab/verify.hpp"
