#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pfo/error.hpp"
#include "pfo/forecaster/config.hpp"
#include "pfo/forecaster/dataset.hpp"
#include "pfo/forecaster/lstm.hpp"
#include "pfo/rng.hpp"

namespace pfo::forecast {

/// Bias-corrected first/second moment updates.
class Adam {
public:
    explicit Adam(const ModelParams& shape, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double epsilon = 1e-7)
        : m_(shape.zeros_like()), v_(shape.zeros_like()), lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {}

    void step(ModelParams& params, const ModelParams& grad) {
        ++t_;
        const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
        auto p = params.tensors();
        auto g = grad.tensors();
        auto m = m_.tensors();
        auto v = v_.tensors();
        for (std::size_t k = 0; k < p.size(); ++k) {
            auto& mk = *m[k].second;
            auto& vk = *v[k].second;
            const auto& gk = *g[k].second;
            mk = b1_ * mk + (1.0 - b1_) * gk;
            vk = b2_ * vk + (1.0 - b2_) * gk.cwiseAbs2();
            const Eigen::ArrayXXd update = (mk.array() / c1) / ((vk.array() / c2).sqrt() + eps_);
            p[k].second->array() -= lr_ * update;
        }
    }

private:
    ModelParams m_, v_;
    double lr_, b1_, b2_, eps_;
    long long t_ = 0;
};

struct EpochMetrics {
    int epoch = 0;
    double train_loss = 0.0;
    double train_mae = 0.0;
    double val_loss = 0.0;
    double val_mae = 0.0;
};

/// One entry per completed epoch. MAE is in scaled units; multiply by the scaler range for prices.
struct TrainHistory {
    std::vector<EpochMetrics> epochs;

    bool operator==(const TrainHistory& o) const {
        if (epochs.size() != o.epochs.size()) return false;
        for (std::size_t i = 0; i < epochs.size(); ++i) {
            const auto &a = epochs[i], &b = o.epochs[i];
            if (a.epoch != b.epoch || a.train_loss != b.train_loss || a.train_mae != b.train_mae ||
                a.val_loss != b.val_loss || a.val_mae != b.val_mae)
                return false;
        }
        return true;
    }
};

struct LossMae {
    double loss = 0.0;
    double mae = 0.0;
};

/// Inference-mode mean Huber loss and MAE over rows [begin, end).
inline LossMae evaluate(const ModelParams& p, const WindowedDataset& data, Eigen::Index begin, Eigen::Index end,
                        double huber_delta, Eigen::Index chunk = 256) {
    if (end <= begin) throw InvalidArgument("evaluate: empty range");
    LossMae out;
    for (Eigen::Index s = begin; s < end; s += chunk) {
        const Eigen::Index n = std::min(chunk, end - s);
        const auto fc = forward_batch(p, data.inputs.middleRows(s, n), nullptr);
        for (Eigen::Index k = 0; k < n; ++k) {
            const double pred = fc.pred(0, k), target = data.targets(s + k);
            out.loss += huber_loss(pred, target, huber_delta);
            out.mae += std::abs(pred - target);
        }
    }
    const auto count = static_cast<double>(end - begin);
    out.loss /= count;
    out.mae /= count;
    return out;
}

struct TrainResult {
    LstmModel model;
    TrainHistory history;
};

/// Seeded initialization (substream 0), shuffling (1) and dropout (2); mini-batch Adam over the
/// training windows with dropout active. Returns the final-epoch model.
inline TrainResult train(const WindowedDataset& data, const ModelConfig& config) {
    config.validate();
    if (data.train_count < 1) throw InvalidArgument("train: empty training partition");
    if (data.lookback != config.lookback)
        throw InvalidArgument("train: dataset lookback " + std::to_string(data.lookback) + " != config lookback " +
                              std::to_string(config.lookback));

    Engine init_rng = substream(config.seed, 0);
    Engine shuffle_rng = substream(config.seed, 1);
    Engine dropout_rng = substream(config.seed, 2);

    TrainResult r;
    r.model.config = config;
    r.model.scaler = data.scaler;
    r.model.params = init_params(config, init_rng);
    Adam adam(r.model.params, config.learning_rate);

    std::vector<Eigen::Index> order(static_cast<std::size_t>(data.train_count));
    std::iota(order.begin(), order.end(), Eigen::Index{0});

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[uniform_index(shuffle_rng, i)]);

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t n = std::min(order.size() - start, static_cast<std::size_t>(config.batch_size));
            Eigen::MatrixXd x(static_cast<Eigen::Index>(n), data.inputs.cols());
            Eigen::VectorXd y(static_cast<Eigen::Index>(n));
            for (std::size_t k = 0; k < n; ++k) {
                x.row(static_cast<Eigen::Index>(k)) = data.inputs.row(order[start + k]);
                y(static_cast<Eigen::Index>(k)) = data.targets(order[start + k]);
            }
            const auto masks = sample_masks(config, static_cast<Eigen::Index>(n), dropout_rng);
            const auto lg = loss_and_gradient(r.model.params, x, y, config.huber_delta, &masks);
            adam.step(r.model.params, lg.grad);
        }

        EpochMetrics em;
        em.epoch = epoch;
        const auto tr = evaluate(r.model.params, data, 0, data.train_count, config.huber_delta);
        em.train_loss = tr.loss;
        em.train_mae = tr.mae;
        if (data.validation_count() > 0) {
            const auto va = evaluate(r.model.params, data, data.train_count, data.size(), config.huber_delta);
            em.val_loss = va.loss;
            em.val_mae = va.mae;
        }
        if (!std::isfinite(em.train_loss)) throw NumericError("train: loss diverged at epoch " + std::to_string(epoch));
        r.history.epochs.push_back(em);
    }
    return r;
}

/// Next-day close in price units from the last `lookback` closes.
inline double predict_next(const LstmModel& model, std::span<const double> last_closes) {
    if (static_cast<int>(last_closes.size()) != model.config.lookback)
        throw InvalidArgument("predict_next: expected " + std::to_string(model.config.lookback) + " closes, got " +
                              std::to_string(last_closes.size()));
    Eigen::VectorXd w(model.config.lookback);
    for (int j = 0; j < model.config.lookback; ++j) {
        const double c = last_closes[static_cast<std::size_t>(j)];
        if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("predict_next: closes must be positive and finite");
        w(j) = model.scaler.scale(c);
    }
    return model.scaler.inverse(model_forward(model, w, false));
}

struct GridSearchResult {
    std::size_t best_index = 0;
    ModelConfig best;
    std::vector<double> final_val_loss;
};

/// Train every candidate on `data`; the lowest final validation loss wins, earliest on ties.
inline GridSearchResult grid_search(std::span<const ModelConfig> candidates, const WindowedDataset& data) {
    if (candidates.empty()) throw InvalidArgument("grid_search: empty grid");
    if (data.validation_count() < 1) throw InvalidArgument("grid_search: dataset has no validation windows");
    GridSearchResult r;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto tr = train(data, candidates[i]);
        const double v = tr.history.epochs.back().val_loss;
        r.final_val_loss.push_back(v);
        if (i == 0 || v < r.final_val_loss[r.best_index]) r.best_index = i;
    }
    r.best = candidates[r.best_index];
    return r;
}

}  // namespace pfo::forecast
