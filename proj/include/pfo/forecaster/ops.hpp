#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "pfo/error.hpp"
#include "pfo/rng.hpp"

namespace pfo::forecast {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& z) {
    return z.unaryExpr([](double v) { return sigmoid(v); });
}

inline Eigen::MatrixXd tanh(const Eigen::MatrixXd& z) {
    return z.unaryExpr([](double v) { return std::tanh(v); });
}

/// e^2/2 inside |e| <= delta, delta*(|e| - delta/2) outside.
inline double huber_loss(double pred, double target, double delta = 1.0) {
    if (!(delta > 0.0)) throw InvalidArgument("huber_loss: delta must be positive");
    const double e = pred - target;
    const double a = std::abs(e);
    return a <= delta ? 0.5 * e * e : delta * (a - 0.5 * delta);
}

/// d huber / d pred.
inline double huber_grad(double pred, double target, double delta = 1.0) {
    if (!(delta > 0.0)) throw InvalidArgument("huber_grad: delta must be positive");
    const double e = pred - target;
    if (std::abs(e) <= delta) return e;
    return e > 0.0 ? delta : -delta;
}

/// Inverted-dropout mask: 0 with probability `rate`, else 1/(1-rate).
inline Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, double rate, Engine& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout: rate must be in [0, 1)");
    const double keep_scale = 1.0 / (1.0 - rate);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform_open01(rng) < rate ? 0.0 : keep_scale;
    return m;
}

/// Identity unless `training`; then each element is zeroed with probability `rate` and
/// survivors are scaled by 1/(1-rate).
inline Eigen::MatrixXd dropout(const Eigen::MatrixXd& v, double rate, bool training, Engine& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout: rate must be in [0, 1)");
    if (!training || rate == 0.0) return v;
    return v.cwiseProduct(dropout_mask(v.rows(), v.cols(), rate, rng));
}

}  // namespace pfo::forecast
