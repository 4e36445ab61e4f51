#pragma once

#include "co2grey/assessment.hpp"
#include "co2grey/config.hpp"
#include "co2grey/core_model.hpp"
#include "co2grey/diagnostics.hpp"
#include "co2grey/error.hpp"
#include "co2grey/inference.hpp"
#include "co2grey/ingest.hpp"
#include "co2grey/io.hpp"
#include "co2grey/presets.hpp"
#include "co2grey/priors.hpp"
#include "co2grey/random.hpp"
#include "co2grey/series.hpp"
#include "co2grey/stats.hpp"
#include "co2grey/units.hpp"
#include "co2grey/version.hpp"
