#pragma once

#include "complex_lu.hpp"
#include "config.hpp"
#include "controllability.hpp"
#include "fem.hpp"
#include "filtering.hpp"
#include "hdg1d.hpp"
#include "helmholtz_ref.hpp"
#include "io.hpp"
#include "linalg.hpp"
#include "mesh.hpp"
#include "problem.hpp"
#include "quadrature.hpp"
#include "scenarios.hpp"
#include "timestepping.hpp"
