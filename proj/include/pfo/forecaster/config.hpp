#pragma once

#include <cstdint>
#include <string>

#include "pfo/error.hpp"

namespace pfo::forecast {

/// Network and training hyperparameters. Defaults are the full-size architecture:
/// two 256-unit LSTM layers, 30% dropout, a 256-unit ReLU layer and a sigmoid head.
struct ModelConfig {
    int lookback = 50;
    int lstm_units = 256;
    int lstm_layers = 2;
    double dropout_rate = 0.3;
    int dense_units = 256;
    int batch_size = 64;
    int epochs = 100;
    double huber_delta = 1.0;
    double learning_rate = 1e-3;
    std::uint64_t seed = 42;
    int horizon = 1;                ///< days ahead of the last window close
    double train_fraction = 0.8;  ///< leading fraction of windows used for training

    bool operator==(const ModelConfig&) const = default;

    void validate() const {
        auto bad = [](const char* field, const std::string& msg) { throw ConfigError(field, msg); };
        if (lookback < 1) bad("lookback", "must be at least 1");
        if (lstm_units < 1) bad("lstm_units", "must be at least 1");
        if (lstm_layers < 1) bad("lstm_layers", "must be at least 1");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) bad("dropout_rate", "must be in [0, 1)");
        if (dense_units < 1) bad("dense_units", "must be at least 1");
        if (batch_size < 1) bad("batch_size", "must be at least 1");
        if (epochs < 1) bad("epochs", "must be at least 1");
        if (!(huber_delta > 0.0)) bad("huber_delta", "must be positive");
        if (!(learning_rate >= 0.0)) bad("learning_rate", "must be non-negative");
        if (horizon < 1) bad("horizon", "must be at least 1");
        if (!(train_fraction > 0.0 && train_fraction < 1.0)) bad("train_fraction", "must be in (0, 1)");
    }
};

}  // namespace pfo::forecast
