// Umbrella header.
#pragma once

#include "fqc/bump.hpp"
#include "fqc/coherence.hpp"
#include "fqc/decompose.hpp"
#include "fqc/exp_sum.hpp"
#include "fqc/fourier_pair.hpp"
#include "fqc/lattice.hpp"
#include "fqc/measure.hpp"
#include "fqc/serialize.hpp"
#include "fqc/types.hpp"
#include "fqc/wiener_calculus.hpp"
