#pragma once

#include "centipede/vec3.hpp"
#include "centipede/body.hpp"
#include "centipede/physics.hpp"
#include "centipede/morphology.hpp"
#include "centipede/controller.hpp"
#include "centipede/gait_analysis.hpp"
#include "centipede/experiment.hpp"
#include "centipede/io.hpp"
#include "centipede/heatmap.hpp"
