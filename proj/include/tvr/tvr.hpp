#pragma once

#include "tvr/balance.hpp"
#include "tvr/dataset.hpp"
#include "tvr/dataset_io.hpp"
#include "tvr/generator.hpp"
#include "tvr/metrics.hpp"
#include "tvr/random.hpp"
#include "tvr/render.hpp"
#include "tvr/scene.hpp"
#include "tvr/service.hpp"
#include "tvr/solver.hpp"
#include "tvr/stats.hpp"
#include "tvr/transform.hpp"
