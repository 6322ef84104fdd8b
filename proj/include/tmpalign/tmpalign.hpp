#pragma once

// Umbrella header: the whole library in one include.

#include "tmpalign/core.hpp"
#include "tmpalign/evalio.hpp"
#include "tmpalign/features.hpp"
#include "tmpalign/oracle.hpp"
#include "tmpalign/parallel.hpp"
#include "tmpalign/pipeline.hpp"
#include "tmpalign/png_io.hpp"
#include "tmpalign/rng.hpp"
#include "tmpalign/synth.hpp"
#include "tmpalign/tmp.hpp"
#include "tmpalign/warp.hpp"
