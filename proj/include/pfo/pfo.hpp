#pragma once

#include "pfo/analytics.hpp"
#include "pfo/backtest.hpp"
#include "pfo/date.hpp"
#include "pfo/error.hpp"
#include "pfo/forecaster.hpp"
#include "pfo/formats.hpp"
#include "pfo/ingest.hpp"
#include "pfo/io.hpp"
#include "pfo/optimizer.hpp"
#include "pfo/remote.hpp"
#include "pfo/rng.hpp"
#include "pfo/run_config.hpp"
