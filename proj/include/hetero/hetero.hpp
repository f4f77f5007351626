#pragma once

// Umbrella header for the core library (Eigen only). Serialization lives in io.hpp.

#include "params.hpp"
#include "dynamics.hpp"
#include "integrate.hpp"
#include "frames.hpp"
#include "outer.hpp"
#include "inner.hpp"
#include "connect.hpp"
#include "linop.hpp"
#include "verify.hpp"
