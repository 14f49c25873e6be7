#ifndef SKETCHSTAT_SKETCHSTAT_HPP
#define SKETCHSTAT_SKETCHSTAT_HPP

// Umbrella header: randomized sketching operators, data-conditional inference
// for sketched least squares and PCA, and the Monte Carlo harness that checks
// the variance constants and interval coverage.

#include "sketchstat/csv.hpp"
#include "sketchstat/datagen.hpp"
#include "sketchstat/error.hpp"
#include "sketchstat/fwht.hpp"
#include "sketchstat/harness.hpp"
#include "sketchstat/io.hpp"
#include "sketchstat/linalg.hpp"
#include "sketchstat/ls_inference.hpp"
#include "sketchstat/parallel.hpp"
#include "sketchstat/pca_inference.hpp"
#include "sketchstat/rng.hpp"
#include "sketchstat/sketch.hpp"
#include "sketchstat/stats.hpp"

#endif  // SKETCHSTAT_SKETCHSTAT_HPP
