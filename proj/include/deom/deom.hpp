#pragma once

#include "deom/bath_expansion.hpp"
#include "deom/bath_json.hpp"
#include "deom/common.hpp"
#include "deom/config.hpp"
#include "deom/frames.hpp"
#include "deom/hierarchy.hpp"
#include "deom/model.hpp"
#include "deom/observables.hpp"
#include "deom/operators.hpp"
#include "deom/oracles.hpp"
#include "deom/quadrature.hpp"
#include "deom/runner.hpp"
#include "deom/spectral_density.hpp"
