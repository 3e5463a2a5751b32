// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header for the HARQ-aided NOMA outage library.

#pragma once

#include "harq_noma/analytic.hpp"
#include "harq_noma/channel.hpp"
#include "harq_noma/diversity.hpp"
#include "harq_noma/model.hpp"
#include "harq_noma/montecarlo.hpp"
#include "harq_noma/mutual_info.hpp"
#include "harq_noma/rng.hpp"
#include "harq_noma/stats.hpp"
