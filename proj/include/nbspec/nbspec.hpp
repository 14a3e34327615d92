#pragma once

// Umbrella header: DC-SBM generation, non-backtracking spectra, spectral
// community detection, branching-process functionals and diagnostics.

#include "nbspec/branching.hpp"
#include "nbspec/dense_eig.hpp"
#include "nbspec/detection.hpp"
#include "nbspec/diagnostics.hpp"
#include "nbspec/graph.hpp"
#include "nbspec/io_util.hpp"
#include "nbspec/model.hpp"
#include "nbspec/nb_operator.hpp"
#include "nbspec/rng.hpp"
#include "nbspec/spectral.hpp"
#include "nbspec/stats.hpp"
#include "nbspec/sweep.hpp"
#include "nbspec/weight_law.hpp"
