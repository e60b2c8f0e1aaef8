#pragma once

#include "ermakov/errors.hpp"
#include "ermakov/dual.hpp"
#include "ermakov/geometry.hpp"
#include "ermakov/expr.hpp"
#include "ermakov/quadrature.hpp"
#include "ermakov/model.hpp"
#include "ermakov/invariants.hpp"
#include "ermakov/ode.hpp"
#include "ermakov/dynamics.hpp"
#include "ermakov/noether.hpp"
#include "ermakov/solver.hpp"
#include "ermakov/linearize.hpp"
#include "ermakov/scenario.hpp"
