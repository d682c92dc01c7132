#pragma once

// Umbrella header.

#include "fsofic/error.hpp"
#include "fsofic/random.hpp"
#include "fsofic/parallel.hpp"
#include "fsofic/free_group.hpp"
#include "fsofic/action.hpp"
#include "fsofic/rational.hpp"
#include "fsofic/shift_space.hpp"
#include "fsofic/markov.hpp"
#include "fsofic/sft.hpp"
#include "fsofic/orbit.hpp"
#include "fsofic/microstates.hpp"
#include "fsofic/io.hpp"
#include "fsofic/harness.hpp"
