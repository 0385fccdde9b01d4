#pragma once

#include "errors.hpp"
#include "types.hpp"
#include "space.hpp"
#include "indicators.hpp"
#include "transforms.hpp"
#include "scalarize.hpp"
#include "surrogate.hpp"
#include "mobo.hpp"
#include "archive.hpp"
#include "dbo.hpp"
#include "baselines.hpp"
#include "problems.hpp"
#include "scheduler.hpp"
#include "harness.hpp"
