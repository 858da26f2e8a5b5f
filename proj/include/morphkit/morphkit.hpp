#pragma once

// morphkit: mesh-guided textured 3D morphing toolkit.

#include "morphkit/binding.hpp"
#include "morphkit/common.hpp"
#include "morphkit/config.hpp"
#include "morphkit/correspond.hpp"
#include "morphkit/gaussian.hpp"
#include "morphkit/geodesic.hpp"
#include "morphkit/losses.hpp"
#include "morphkit/mesh.hpp"
#include "morphkit/mesh_io.hpp"
#include "morphkit/metrics.hpp"
#include "morphkit/morphflow.hpp"
#include "morphkit/optimizer.hpp"
#include "morphkit/render.hpp"
#include "morphkit/synth.hpp"
#include "morphkit/tensor.hpp"
#include "morphkit/trainer.hpp"
