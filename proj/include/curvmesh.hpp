#pragma once

#include "curvmesh/errors.hpp"
#include "curvmesh/rng.hpp"
#include "curvmesh/point_cloud.hpp"
#include "curvmesh/sampling.hpp"
#include "curvmesh/neighbors.hpp"
#include "curvmesh/tangent.hpp"
#include "curvmesh/predicates.hpp"
#include "curvmesh/local_mesh.hpp"
#include "curvmesh/gmls.hpp"
#include "curvmesh/chart.hpp"
#include "curvmesh/local_model.hpp"
#include "curvmesh/assembly.hpp"
#include "curvmesh/eigensolver.hpp"
#include "curvmesh/oracles.hpp"
#include "curvmesh/metrics.hpp"
#include "curvmesh/io.hpp"
#include "curvmesh/config.hpp"
#include "curvmesh/benchmark.hpp"
