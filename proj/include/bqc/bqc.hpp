#pragma once

// Everything except config.hpp, which pulls in yaml-cpp.

#include "bqc/spectral.hpp"
#include "bqc/elliptic.hpp"
#include "bqc/solver.hpp"
#include "bqc/profiles.hpp"
#include "bqc/return_method.hpp"
#include "bqc/transport.hpp"
#include "bqc/vorticity_steering.hpp"
#include "bqc/temperature_steering.hpp"
#include "bqc/pipeline.hpp"
#include "bqc/io.hpp"
#include "bqc/checks.hpp"
