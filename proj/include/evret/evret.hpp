#pragma once

#include "evret/aggregation.hpp"
#include "evret/config.hpp"
#include "evret/errors.hpp"
#include "evret/evidence.hpp"
#include "evret/identification.hpp"
#include "evret/io.hpp"
#include "evret/losses.hpp"
#include "evret/matrix.hpp"
#include "evret/numeric.hpp"
#include "evret/parallel.hpp"
#include "evret/pipeline.hpp"
#include "evret/report.hpp"
#include "evret/rng.hpp"
#include "evret/similarity.hpp"
#include "evret/synth.hpp"
#include "evret/transport.hpp"
