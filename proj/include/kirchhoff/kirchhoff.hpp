#pragma once

#include "kirchhoff/error.hpp"
#include "kirchhoff/quadrature.hpp"
#include "kirchhoff/spectral_basis.hpp"
#include "kirchhoff/nonlinearity.hpp"
#include "kirchhoff/functional.hpp"
#include "kirchhoff/flow.hpp"
#include "kirchhoff/minimax_flow.hpp"
#include "kirchhoff/fountain.hpp"
#include "kirchhoff/oracles.hpp"
#include "kirchhoff/cli_io.hpp"
