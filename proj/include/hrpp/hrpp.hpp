// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "hrpp/bvh.hpp"
#include "hrpp/error.hpp"
#include "hrpp/geom.hpp"
#include "hrpp/hash.hpp"
#include "hrpp/log.hpp"
#include "hrpp/metrics.hpp"
#include "hrpp/predictor.hpp"
#include "hrpp/scene.hpp"
#include "hrpp/sweep.hpp"
#include "hrpp/tracer.hpp"
