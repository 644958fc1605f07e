#pragma once

// Umbrella header for the goal-oriented compression workbench: per-sensor
// binary encoders, a fusion classifier trained against a frozen raw-input
// teacher, and the surrounding data/evaluation/CLI plumbing.

#include "goalcomp/activations.hpp"
#include "goalcomp/adam.hpp"
#include "goalcomp/backprop.hpp"
#include "goalcomp/bundle.hpp"
#include "goalcomp/cli.hpp"
#include "goalcomp/config.hpp"
#include "goalcomp/data.hpp"
#include "goalcomp/errors.hpp"
#include "goalcomp/evaluation.hpp"
#include "goalcomp/format.hpp"
#include "goalcomp/layer.hpp"
#include "goalcomp/losses.hpp"
#include "goalcomp/model.hpp"
#include "goalcomp/pgm.hpp"
#include "goalcomp/pipeline.hpp"
#include "goalcomp/rng.hpp"
#include "goalcomp/serialize.hpp"
#include "goalcomp/tensor.hpp"
#include "goalcomp/training.hpp"
