#pragma once

#include "error.hpp"
#include "ndarray.hpp"
#include "geometry.hpp"
#include "geojson.hpp"
#include "spatial_discretization.hpp"
#include "time_discretization.hpp"
#include "events.hpp"
#include "geo_variables.hpp"
#include "param.hpp"
#include "solver.hpp"
#include "qp_projection.hpp"
#include "regularized_model.hpp"
#include "covariates_model.hpp"
#include "cross_validation.hpp"
#include "io_formats.hpp"
#include "calibrate.hpp"
