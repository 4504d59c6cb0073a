#pragma once

#include "bhr/common.hpp"
#include "bhr/config.hpp"
#include "bhr/convergence.hpp"
#include "bhr/envelope.hpp"
#include "bhr/extension.hpp"
#include "bhr/field.hpp"
#include "bhr/grid.hpp"
#include "bhr/integrand.hpp"
#include "bhr/lipschitz.hpp"
#include "bhr/measure.hpp"
#include "bhr/relaxation.hpp"
#include "bhr/tensor.hpp"
#include "bhr/verify.hpp"
