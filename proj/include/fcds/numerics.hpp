#pragma once

#include "fcds/numerics/checkpoint.hpp"
#include "fcds/numerics/grad_check.hpp"
#include "fcds/numerics/parameters.hpp"
#include "fcds/numerics/tensor.hpp"
