#pragma once

#include "efs/container_io.hpp"
#include "efs/experiment.hpp"
#include "efs/fft.hpp"
#include "efs/generator.hpp"
#include "efs/grid.hpp"
#include "efs/lightfield.hpp"
#include "efs/metrics.hpp"
#include "efs/parallel.hpp"
#include "efs/reconstruct.hpp"
#include "efs/refocus.hpp"
#include "efs/sampling.hpp"
#include "efs/spectrum.hpp"
