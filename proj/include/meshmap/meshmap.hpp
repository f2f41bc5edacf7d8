#pragma once

#include "meshmap/body_model.hpp"
#include "meshmap/camera.hpp"
#include "meshmap/center_map.hpp"
#include "meshmap/decode.hpp"
#include "meshmap/error.hpp"
#include "meshmap/gmm_prior.hpp"
#include "meshmap/losses.hpp"
#include "meshmap/maps.hpp"
#include "meshmap/metrics.hpp"
#include "meshmap/procrustes.hpp"
#include "meshmap/rotation.hpp"
#include "meshmap/scene.hpp"
#include "meshmap/scene_json.hpp"
#include "meshmap/tensor_io.hpp"
