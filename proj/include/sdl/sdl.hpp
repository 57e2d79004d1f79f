#pragma once
//! \file
//! \brief Umbrella header.

#include "sdl/beckmann.hpp"
#include "sdl/calculus.hpp"
#include "sdl/currents.hpp"
#include "sdl/normed.hpp"
#include "sdl/numeric.hpp"
#include "sdl/sobolev.hpp"
#include "sdl/space.hpp"
#include "sdl/superposition.hpp"
