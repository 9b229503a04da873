#pragma once

#include "tbm/error.hpp"
#include "tbm/subset.hpp"
#include "tbm/domain.hpp"
#include "tbm/mass_function.hpp"
#include "tbm/propagation.hpp"
#include "tbm/pignistic.hpp"
#include "tbm/planner.hpp"
#include "tbm/model_io.hpp"
#include "tbm/tree_document.hpp"
#include "tbm/session.hpp"
