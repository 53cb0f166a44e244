#pragma once

#include "uwofdm/types.hpp"
#include "uwofdm/numerics.hpp"
#include "uwofdm/sysconfig.hpp"
#include "uwofdm/codebook.hpp"
#include "uwofdm/fec.hpp"
#include "uwofdm/mapping.hpp"
#include "uwofdm/txchain.hpp"
#include "uwofdm/channel.hpp"
#include "uwofdm/rxfront.hpp"
#include "uwofdm/errmodel.hpp"
#include "uwofdm/harness/experiment.hpp"
#include "uwofdm/harness/parallel.hpp"
#include "uwofdm/harness/results.hpp"
#include "uwofdm/harness/link.hpp"
#include "uwofdm/harness/sweeps.hpp"
#include "uwofdm/harness/plot.hpp"
