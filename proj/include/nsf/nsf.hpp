#pragma once
// Umbrella header.

#include "nsf/constitutive.hpp"
#include "nsf/truncation.hpp"
#include "nsf/exponents.hpp"
#include "nsf/quadrature.hpp"
#include "nsf/discretization.hpp"
#include "nsf/solver.hpp"
#include "nsf/pressure.hpp"
#include "nsf/diagnostics.hpp"
#include "nsf/config.hpp"
#include "nsf/report.hpp"
#include "nsf/verify.hpp"
