#pragma once

// umbrella header

#include "lonrec/errors.hpp"
#include "lonrec/fit.hpp"
#include "lonrec/harness.hpp"
#include "lonrec/io.hpp"
#include "lonrec/loss.hpp"
#include "lonrec/net.hpp"
#include "lonrec/optimize.hpp"
#include "lonrec/probes.hpp"
#include "lonrec/recon.hpp"
#include "lonrec/rng.hpp"
#include "lonrec/svg.hpp"
