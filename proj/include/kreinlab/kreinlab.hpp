#pragma once

#include "kreinlab/assembly.hpp"
#include "kreinlab/bounds.hpp"
#include "kreinlab/coefficients.hpp"
#include "kreinlab/eigensolve.hpp"
#include "kreinlab/errors.hpp"
#include "kreinlab/experiment.hpp"
#include "kreinlab/expression.hpp"
#include "kreinlab/grid_domain.hpp"
#include "kreinlab/quadrature.hpp"
#include "kreinlab/scattering.hpp"
#include "kreinlab/verify.hpp"
