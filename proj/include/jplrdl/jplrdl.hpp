#pragma once

// Convenience umbrella for the whole library: joint projection and
// dictionary training, the residual classifier, dataset plumbing, and
// model persistence.

#include "jplrdl/config.hpp"
#include "jplrdl/dataset.hpp"
#include "jplrdl/dict_learn.hpp"
#include "jplrdl/dictionary.hpp"
#include "jplrdl/errors.hpp"
#include "jplrdl/graphs.hpp"
#include "jplrdl/linalg.hpp"
#include "jplrdl/model_io.hpp"
#include "jplrdl/pipeline.hpp"
#include "jplrdl/projection.hpp"
#include "jplrdl/rng.hpp"
#include "jplrdl/rpca.hpp"
#include "jplrdl/sparse_coding.hpp"
