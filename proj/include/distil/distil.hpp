#pragma once

#include "gf2.hpp"
#include "bell.hpp"
#include "engine.hpp"
#include "recurrence.hpp"
#include "oracle.hpp"
