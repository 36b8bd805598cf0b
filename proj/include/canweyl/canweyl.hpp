#pragma once

#include "canweyl/config.hpp"
#include "canweyl/core.hpp"
#include "canweyl/corpus.hpp"
#include "canweyl/errors.hpp"
#include "canweyl/estimator.hpp"
#include "canweyl/hamiltonian.hpp"
#include "canweyl/monotone.hpp"
#include "canweyl/quadrature.hpp"
#include "canweyl/roots.hpp"
#include "canweyl/series.hpp"
#include "canweyl/spectral.hpp"
#include "canweyl/strings.hpp"
#include "canweyl/sweep.hpp"
#include "canweyl/weyl.hpp"
