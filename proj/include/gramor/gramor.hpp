#pragma once

#include "gramor/benchmark.hpp"
#include "gramor/bounds.hpp"
#include "gramor/errors.hpp"
#include "gramor/io.hpp"
#include "gramor/lyapunov.hpp"
#include "gramor/matrix.hpp"
#include "gramor/reduction.hpp"
#include "gramor/rng.hpp"
#include "gramor/signal.hpp"
#include "gramor/simulate.hpp"
#include "gramor/stability.hpp"
#include "gramor/system.hpp"
