#pragma once

// Convenience umbrella header.

#include "spfx/config.hpp"
#include "spfx/csv.hpp"
#include "spfx/errors.hpp"
#include "spfx/gaussian.hpp"
#include "spfx/inverted_index.hpp"
#include "spfx/io.hpp"
#include "spfx/mat.hpp"
#include "spfx/metrics.hpp"
#include "spfx/model.hpp"
#include "spfx/sparse.hpp"
#include "spfx/synthetic.hpp"
#include "spfx/trainer.hpp"
