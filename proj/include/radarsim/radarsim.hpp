#pragma once

#include "radarsim/antenna.hpp"
#include "radarsim/baseband.hpp"
#include "radarsim/channel.hpp"
#include "radarsim/dsp.hpp"
#include "radarsim/localization.hpp"
#include "radarsim/matrix_io.hpp"
#include "radarsim/reflector.hpp"
#include "radarsim/rooms.hpp"
#include "radarsim/scenario.hpp"
#include "radarsim/scene.hpp"
