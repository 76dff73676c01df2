#pragma once

#include "pfo/forecaster/checkpoint.hpp"
#include "pfo/forecaster/config.hpp"
#include "pfo/forecaster/dataset.hpp"
#include "pfo/forecaster/lstm.hpp"
#include "pfo/forecaster/ops.hpp"
#include "pfo/forecaster/scaler.hpp"
#include "pfo/forecaster/train.hpp"
