#pragma once

#include "toothfuse/config.hpp"
#include "toothfuse/core.hpp"
#include "toothfuse/extraction.hpp"
#include "toothfuse/fpfh.hpp"
#include "toothfuse/fusion.hpp"
#include "toothfuse/io.hpp"
#include "toothfuse/kdtree.hpp"
#include "toothfuse/marching_cubes.hpp"
#include "toothfuse/mesh_ops.hpp"
#include "toothfuse/metrics.hpp"
#include "toothfuse/parallel.hpp"
#include "toothfuse/pipeline.hpp"
#include "toothfuse/point_ops.hpp"
#include "toothfuse/registration.hpp"
#include "toothfuse/rng.hpp"
#include "toothfuse/sdf_network.hpp"
#include "toothfuse/sdf_sample.hpp"
#include "toothfuse/synthetic.hpp"
#include "toothfuse/triangle_index.hpp"
