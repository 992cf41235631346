#pragma once

#include "bhm/accum.hpp"
#include "bhm/errors.hpp"
#include "bhm/hierarchy.hpp"
#include "bhm/spline.hpp"
#include "bhm/splinefit.hpp"
#include "bhm/testbed.hpp"
#include "bhm/transforms.hpp"
#include "bhm/zerocheck.hpp"
