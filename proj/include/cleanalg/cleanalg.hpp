#pragma once

#include "cleanalg/error.hpp"
#include "cleanalg/tolerance.hpp"
#include "cleanalg/matrix.hpp"
#include "cleanalg/kernel.hpp"
#include "cleanalg/lattice.hpp"
#include "cleanalg/two_projections.hpp"
#include "cleanalg/clean.hpp"
#include "cleanalg/random.hpp"
#include "cleanalg/json_io.hpp"
#include "cleanalg/campaign.hpp"
