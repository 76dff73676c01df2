#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pfo/error.hpp"
#include "pfo/forecaster/config.hpp"
#include "pfo/forecaster/ops.hpp"
#include "pfo/forecaster/scaler.hpp"
#include "pfo/rng.hpp"

namespace pfo::forecast {

/// Gate pre-activations are stacked in blocks of `units` rows: input, forget, cell candidate, output.
struct LstmLayerParams {
    Eigen::MatrixXd W;  // 4H x in
    Eigen::MatrixXd U;  // 4H x H
    Eigen::MatrixXd b;  // 4H x 1

    Eigen::Index units() const { return U.cols(); }
    Eigen::Index input_size() const { return W.cols(); }
};

struct DenseParams {
    Eigen::MatrixXd W;  // out x in
    Eigen::MatrixXd b;  // out x 1
};

/// Every learnable tensor of the network. Also used as the container for gradients and
/// optimizer moments.
struct ModelParams {
    std::vector<LstmLayerParams> lstm;
    DenseParams hidden;
    DenseParams head;

    std::vector<std::pair<std::string, Eigen::MatrixXd*>> tensors() {
        std::vector<std::pair<std::string, Eigen::MatrixXd*>> out;
        for (std::size_t l = 0; l < lstm.size(); ++l) {
            const std::string p = "lstm" + std::to_string(l) + ".";
            out.emplace_back(p + "W", &lstm[l].W);
            out.emplace_back(p + "U", &lstm[l].U);
            out.emplace_back(p + "b", &lstm[l].b);
        }
        out.emplace_back("dense.W", &hidden.W);
        out.emplace_back("dense.b", &hidden.b);
        out.emplace_back("head.W", &head.W);
        out.emplace_back("head.b", &head.b);
        return out;
    }

    std::vector<std::pair<std::string, const Eigen::MatrixXd*>> tensors() const {
        std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out;
        for (auto& [name, t] : const_cast<ModelParams*>(this)->tensors()) out.emplace_back(name, t);
        return out;
    }

    ModelParams zeros_like() const {
        ModelParams z = *this;
        for (auto& [name, t] : z.tensors()) t->setZero();
        return z;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& [name, t] : tensors()) n += static_cast<std::size_t>(t->size());
        return n;
    }
};

/// Allocate zero-valued tensors shaped for `cfg` (input width 1).
inline ModelParams zero_params(const ModelConfig& cfg) {
    ModelParams p;
    const Eigen::Index H = cfg.lstm_units;
    for (int l = 0; l < cfg.lstm_layers; ++l) {
        const Eigen::Index in = l == 0 ? 1 : H;
        p.lstm.push_back({Eigen::MatrixXd::Zero(4 * H, in), Eigen::MatrixXd::Zero(4 * H, H),
                          Eigen::MatrixXd::Zero(4 * H, 1)});
    }
    p.hidden = {Eigen::MatrixXd::Zero(cfg.dense_units, H), Eigen::MatrixXd::Zero(cfg.dense_units, 1)};
    p.head = {Eigen::MatrixXd::Zero(1, cfg.dense_units), Eigen::MatrixXd::Zero(1, 1)};
    return p;
}

/// Weights uniform in +-1/sqrt(fan_in), biases zero except the forget-gate bias, which is 1.
inline ModelParams init_params(const ModelConfig& cfg, Engine& rng) {
    ModelParams p = zero_params(cfg);
    auto fill = [&](Eigen::MatrixXd& m) {
        const double limit = 1.0 / std::sqrt(static_cast<double>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -limit, limit);
    };
    for (auto& layer : p.lstm) {
        fill(layer.W);
        fill(layer.U);
        layer.b.middleRows(layer.units(), layer.units()).setOnes();
    }
    fill(p.hidden.W);
    fill(p.head.W);
    return p;
}

/// Trained network plus the scaler mapping prices into its (0, 1) output range.
struct LstmModel {
    ModelConfig config;
    MinMaxScaler scaler;
    ModelParams params;
};

/// One time step for a batch of columns.
struct StepCache {
    Eigen::MatrixXd x, h_prev, c_prev;
    Eigen::MatrixXd i, f, g, o;
    Eigen::MatrixXd c, tanh_c, h;
};

inline StepCache lstm_step(const LstmLayerParams& p, const Eigen::MatrixXd& x, const Eigen::MatrixXd& h_prev,
                           const Eigen::MatrixXd& c_prev) {
    const Eigen::Index H = p.units();
    if (x.rows() != p.input_size() || h_prev.rows() != H || c_prev.rows() != H || h_prev.cols() != x.cols() ||
        c_prev.cols() != x.cols())
        throw InvalidArgument("lstm_step: shape mismatch");
    Eigen::MatrixXd z = p.W * x + p.U * h_prev;
    z.colwise() += p.b.col(0);
    StepCache s;
    s.x = x;
    s.h_prev = h_prev;
    s.c_prev = c_prev;
    s.i = sigmoid(z.topRows(H));
    s.f = sigmoid(z.middleRows(H, H));
    s.g = tanh(z.middleRows(2 * H, H));
    s.o = sigmoid(z.bottomRows(H));
    s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
    s.tanh_c = tanh(s.c);
    s.h = s.o.cwiseProduct(s.tanh_c);
    return s;
}

struct CellState {
    Eigen::VectorXd h;
    Eigen::VectorXd c;
};

/// Single-sample LSTM step: c = f*c_prev + i*g, h = o*tanh(c).
inline CellState lstm_cell_forward(const LstmLayerParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& h_prev,
                                   const Eigen::VectorXd& c_prev) {
    const auto s = lstm_step(p, x, h_prev, c_prev);
    return {s.h.col(0), s.c.col(0)};
}

/// Dropout multipliers for one batch. `sequence[l][t]` follows LSTM layer l (all but the last) at
/// step t; `final` follows the last layer's final hidden state. Empty matrices mean identity.
struct DropoutMasks {
    std::vector<std::vector<Eigen::MatrixXd>> sequence;
    Eigen::MatrixXd final;
};

inline DropoutMasks sample_masks(const ModelConfig& cfg, Eigen::Index batch, Engine& rng) {
    DropoutMasks m;
    if (cfg.dropout_rate == 0.0) return m;
    m.sequence.resize(static_cast<std::size_t>(cfg.lstm_layers - 1));
    for (auto& layer : m.sequence)
        for (int t = 0; t < cfg.lookback; ++t) layer.push_back(dropout_mask(cfg.lstm_units, batch, cfg.dropout_rate, rng));
    m.final = dropout_mask(cfg.lstm_units, batch, cfg.dropout_rate, rng);
    return m;
}

struct ForwardCache {
    std::vector<std::vector<StepCache>> steps;  // [layer][t]
    Eigen::MatrixXd final_hidden;               // after dropout, H x B
    Eigen::MatrixXd dense_pre;                  // D x B
    Eigen::MatrixXd dense_out;                  // ReLU, D x B
    Eigen::MatrixXd head_pre;                   // 1 x B
    Eigen::MatrixXd pred;                       // 1 x B
};

namespace detail {
inline Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& v, const Eigen::MatrixXd* mask) {
    return mask && mask->size() ? v.cwiseProduct(*mask) : v;
}
}  // namespace detail

/// Batched forward pass. `inputs` is B x lookback (one window per row); `masks == nullptr`
/// runs in inference mode.
inline ForwardCache forward_batch(const ModelParams& p, const Eigen::MatrixXd& inputs, const DropoutMasks* masks) {
    const Eigen::Index B = inputs.rows();
    const Eigen::Index L = inputs.cols();
    if (p.lstm.empty() || p.lstm.front().input_size() != 1) throw InvalidArgument("forward: malformed parameters");
    ForwardCache fc;
    fc.steps.resize(p.lstm.size());

    for (std::size_t l = 0; l < p.lstm.size(); ++l) {
        const auto& layer = p.lstm[l];
        const Eigen::Index H = layer.units();
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(H, B);
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(H, B);
        fc.steps[l].reserve(static_cast<std::size_t>(L));
        for (Eigen::Index t = 0; t < L; ++t) {
            Eigen::MatrixXd x;
            if (l == 0) {
                x = inputs.col(t).transpose();
            } else {
                const Eigen::MatrixXd* mask = nullptr;
                if (masks && !masks->sequence.empty()) mask = &masks->sequence[l - 1][static_cast<std::size_t>(t)];
                x = detail::apply_mask(fc.steps[l - 1][static_cast<std::size_t>(t)].h, mask);
            }
            fc.steps[l].push_back(lstm_step(layer, x, h, c));
            h = fc.steps[l].back().h;
            c = fc.steps[l].back().c;
        }
    }

    fc.final_hidden = detail::apply_mask(fc.steps.back().back().h, masks ? &masks->final : nullptr);
    fc.dense_pre = p.hidden.W * fc.final_hidden;
    fc.dense_pre.colwise() += p.hidden.b.col(0);
    fc.dense_out = fc.dense_pre.cwiseMax(0.0);
    fc.head_pre = p.head.W * fc.dense_out;
    fc.head_pre.colwise() += p.head.b.col(0);
    fc.pred = sigmoid(fc.head_pre);
    return fc;
}

/// Scaled prediction in (0, 1) for one window of `lookback` scaled closes. With `training`,
/// dropout masks are drawn from `rng`.
inline double model_forward(const LstmModel& model, const Eigen::VectorXd& window, bool training = false,
                            Engine* rng = nullptr) {
    if (window.size() != model.config.lookback)
        throw InvalidArgument("model_forward: window length " + std::to_string(window.size()) + " != lookback " +
                              std::to_string(model.config.lookback));
    const Eigen::MatrixXd in = window.transpose();
    if (training && model.config.dropout_rate > 0.0) {
        if (!rng) throw InvalidArgument("model_forward: training mode needs an RNG");
        const auto masks = sample_masks(model.config, 1, *rng);
        return forward_batch(model.params, in, &masks).pred(0, 0);
    }
    return forward_batch(model.params, in, nullptr).pred(0, 0);
}

struct LossAndGradient {
    double loss = 0.0;
    ModelParams grad;
};

/// Mean Huber loss over the batch and its gradient with respect to every tensor (backpropagation
/// through time over both the sequence and the layer stack).
inline LossAndGradient loss_and_gradient(const ModelParams& p, const Eigen::MatrixXd& inputs,
                                         const Eigen::VectorXd& targets, double huber_delta,
                                         const DropoutMasks* masks = nullptr) {
    const Eigen::Index B = inputs.rows();
    if (B == 0) throw InvalidArgument("backward: empty batch");
    if (targets.size() != B) throw InvalidArgument("backward: targets/inputs batch mismatch");
    const auto fc = forward_batch(p, inputs, masks);

    LossAndGradient out;
    out.grad = p.zeros_like();
    auto& g = out.grad;

    Eigen::MatrixXd d_head(1, B);
    for (Eigen::Index k = 0; k < B; ++k) {
        const double pred = fc.pred(0, k);
        out.loss += huber_loss(pred, targets(k), huber_delta);
        d_head(0, k) = huber_grad(pred, targets(k), huber_delta) / static_cast<double>(B) * pred * (1.0 - pred);
    }
    out.loss /= static_cast<double>(B);

    g.head.W = d_head * fc.dense_out.transpose();
    g.head.b = d_head.rowwise().sum();
    Eigen::MatrixXd d_dense = (p.head.W.transpose() * d_head).cwiseProduct(
        (fc.dense_pre.array() > 0.0).cast<double>().matrix());
    g.hidden.W = d_dense * fc.final_hidden.transpose();
    g.hidden.b = d_dense.rowwise().sum();
    Eigen::MatrixXd d_final = detail::apply_mask(p.hidden.W.transpose() * d_dense, masks ? &masks->final : nullptr);

    const auto L = fc.steps.front().size();
    // Gradient arriving at each step's hidden output from the layer above.
    std::vector<Eigen::MatrixXd> d_above(L);
    for (auto& d : d_above) d = Eigen::MatrixXd::Zero(p.lstm.back().units(), B);
    d_above.back() = d_final;

    for (std::size_t l = p.lstm.size(); l-- > 0;) {
        const auto& layer = p.lstm[l];
        auto& gl = g.lstm[l];
        const Eigen::Index H = layer.units();
        Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
        Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
        std::vector<Eigen::MatrixXd> d_below(L);
        Eigen::MatrixXd dz(4 * H, B);

        for (std::size_t t = L; t-- > 0;) {
            const auto& s = fc.steps[l][t];
            const Eigen::MatrixXd dh = d_above[t] + dh_next;
            const Eigen::ArrayXXd one = Eigen::ArrayXXd::Ones(H, B);
            const Eigen::ArrayXXd dc = dh.array() * s.o.array() * (one - s.tanh_c.array().square()) + dc_next.array();
            dz.topRows(H) = (dc * s.g.array() * s.i.array() * (one - s.i.array())).matrix();
            dz.middleRows(H, H) = (dc * s.c_prev.array() * s.f.array() * (one - s.f.array())).matrix();
            dz.middleRows(2 * H, H) = (dc * s.i.array() * (one - s.g.array().square())).matrix();
            dz.bottomRows(H) = (dh.array() * s.tanh_c.array() * s.o.array() * (one - s.o.array())).matrix();

            gl.W.noalias() += dz * s.x.transpose();
            gl.U.noalias() += dz * s.h_prev.transpose();
            gl.b += dz.rowwise().sum();
            if (l > 0) d_below[t] = layer.W.transpose() * dz;
            dh_next = layer.U.transpose() * dz;
            dc_next = (dc * s.f.array()).matrix();
        }

        if (l > 0) {
            for (std::size_t t = 0; t < L; ++t) {
                const Eigen::MatrixXd* mask =
                    masks && !masks->sequence.empty() ? &masks->sequence[l - 1][t] : nullptr;
                d_above[t] = detail::apply_mask(d_below[t], mask);
            }
        }
    }
    return out;
}

}  // namespace pfo::forecast
