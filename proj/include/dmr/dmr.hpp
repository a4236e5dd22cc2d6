#pragma once

#include "dmr/character.hpp"
#include "dmr/dmi.hpp"
#include "dmr/errors.hpp"
#include "dmr/io.hpp"
#include "dmr/kinematics.hpp"
#include "dmr/mesh.hpp"
#include "dmr/metrics.hpp"
#include "dmr/objective.hpp"
#include "dmr/optimizer.hpp"
#include "dmr/parallel.hpp"
#include "dmr/rotation.hpp"
#include "dmr/scs.hpp"
#include "dmr/synthetic.hpp"
