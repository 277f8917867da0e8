#pragma once
#include "atomics.hpp"
#include "config.hpp"
#include "fieldio.hpp"
#include "fmult.hpp"
#include "generators.hpp"
#include "normsuite.hpp"
