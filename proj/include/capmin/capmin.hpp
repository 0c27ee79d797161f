#pragma once

#include "asymptotics.hpp"
#include "errors.hpp"
#include "extended.hpp"
#include "io.hpp"
#include "landscape.hpp"
#include "minimizer.hpp"
#include "numerics.hpp"
#include "ode_oracle.hpp"
#include "potential.hpp"
#include "profile.hpp"
