#pragma once

#include <algorithm>
#include <span>

#include "pfo/error.hpp"

namespace pfo::forecast {

/// Affine map of [min, max] onto [0, 1].
struct MinMaxScaler {
    double min = 0.0;
    double max = 1.0;

    static MinMaxScaler fit(std::span<const double> xs) {
        if (xs.empty()) throw InvalidArgument("MinMaxScaler::fit: no data");
        const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
        MinMaxScaler s{*lo, *hi};
        s.check();
        return s;
    }

    void check() const {
        if (!(max > min)) throw NumericError("degenerate scaler: max must exceed min");
    }

    double scale(double x) const {
        check();
        return (x - min) / (max - min);
    }

    double inverse(double y) const {
        check();
        return min + y * (max - min);
    }

    bool operator==(const MinMaxScaler&) const = default;
};

inline double minmax_scale(double x, const MinMaxScaler& s) { return s.scale(x); }
inline double inverse_scale(double y, const MinMaxScaler& s) { return s.inverse(y); }

}  // namespace pfo::forecast
