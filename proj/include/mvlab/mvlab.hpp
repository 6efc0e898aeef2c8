#pragma once

#include "mvlab/core.hpp"
#include "mvlab/empirical_measure.hpp"
#include "mvlab/experiments.hpp"
#include "mvlab/io.hpp"
#include "mvlab/lyapunov.hpp"
#include "mvlab/model.hpp"
#include "mvlab/noise.hpp"
#include "mvlab/particle.hpp"
#include "mvlab/wasserstein.hpp"
