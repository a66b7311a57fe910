// Umbrella header.
#pragma once

#include "concurrency.hpp"
#include "equilibration.hpp"
#include "estimator.hpp"
#include "fields.hpp"
#include "lifting.hpp"
#include "linsolve.hpp"
#include "mesh.hpp"
#include "mesh_io.hpp"
#include "oracle.hpp"
#include "polynomial.hpp"
#include "primal.hpp"
#include "problems.hpp"
#include "quadrature.hpp"
#include "rtn.hpp"
