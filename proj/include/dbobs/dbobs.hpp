#pragma once

#include "dbobs/error.hpp"
#include "dbobs/format.hpp"
#include "dbobs/subspace.hpp"
#include "dbobs/linear.hpp"
#include "dbobs/nonlinear.hpp"
#include "dbobs/benchmark.hpp"
#include "dbobs/io.hpp"
