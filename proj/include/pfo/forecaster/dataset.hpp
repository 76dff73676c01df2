#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfo/error.hpp"
#include "pfo/forecaster/scaler.hpp"
#include "pfo/ingest.hpp"

namespace pfo::forecast {

/// Sliding windows over scaled closes. Row k of `inputs` holds the `lookback` closes
/// preceding `targets(k)`; rows [0, train_count) form the training partition.
struct WindowedDataset {
    Eigen::MatrixXd inputs;   // m x lookback
    Eigen::VectorXd targets;  // m
    Eigen::Index train_count = 0;
    MinMaxScaler scaler;
    int lookback = 0;
    int horizon = 1;

    Eigen::Index size() const { return targets.size(); }
    Eigen::Index validation_count() const { return size() - train_count; }
};

/// m = T - lookback - horizon + 1 windows, split chronologically; the scaler sees only the closes
/// touched by training windows.
inline WindowedDataset window(std::span<const double> closes, int lookback, double train_fraction = 0.8,
                              int horizon = 1) {
    if (lookback < 1 || horizon < 1) throw InvalidArgument("window: lookback and horizon must be at least 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw InvalidArgument("window: train_fraction must be in (0, 1)");
    const auto T = static_cast<Eigen::Index>(closes.size());
    const Eigen::Index m = T - lookback - horizon + 1;
    if (m < 2)
        throw InvalidArgument("window: series of length " + std::to_string(T) + " is too short for lookback " +
                              std::to_string(lookback));

    WindowedDataset ds;
    ds.lookback = lookback;
    ds.horizon = horizon;
    const auto train = static_cast<Eigen::Index>(std::floor(static_cast<double>(m) * train_fraction));
    ds.train_count = std::clamp<Eigen::Index>(train, 1, m - 1);

    // Training windows touch closes [0, train_count - 1 + lookback + horizon - 1].
    const auto fit_end = static_cast<std::size_t>(ds.train_count + lookback + horizon - 1);
    ds.scaler = MinMaxScaler::fit(closes.first(fit_end));

    ds.inputs.resize(m, lookback);
    ds.targets.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        for (Eigen::Index j = 0; j < lookback; ++j)
            ds.inputs(k, j) = ds.scaler.scale(closes[static_cast<std::size_t>(k + j)]);
        ds.targets(k) = ds.scaler.scale(closes[static_cast<std::size_t>(k + lookback + horizon - 1)]);
    }
    return ds;
}

inline WindowedDataset window(const PriceSeries& prices, int lookback, double train_fraction = 0.8,
                              int horizon = 1) {
    const auto closes = prices.closes();
    return window(std::span<const double>(closes), lookback, train_fraction, horizon);
}

}  // namespace pfo::forecast
