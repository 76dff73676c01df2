#pragma once

// Independent reference computations used by both the unit tests and the acceptance runner.
// Each is written in the most literal form possible, without sharing code with the library.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfo/optimizer.hpp"

namespace pfo::oracle {

/// Portfolio variance written out term by term for five assets: five squared-weight variance
/// terms plus ten doubled pairwise covariance terms.
inline double variance_15_terms(const double w[5], const Eigen::MatrixXd& c) {
    const double s1 = c(0, 0), s2 = c(1, 1), s3 = c(2, 2), s4 = c(3, 3), s5 = c(4, 4);
    return w[0] * w[0] * s1 + w[1] * w[1] * s2 + w[2] * w[2] * s3 + w[3] * w[3] * s4 + w[4] * w[4] * s5 +
           2 * w[0] * w[1] * c(0, 1) + 2 * w[0] * w[2] * c(0, 2) + 2 * w[0] * w[3] * c(0, 3) +
           2 * w[0] * w[4] * c(0, 4) + 2 * w[1] * w[2] * c(1, 2) + 2 * w[1] * w[3] * c(1, 3) +
           2 * w[1] * w[4] * c(1, 4) + 2 * w[2] * w[3] * c(2, 3) + 2 * w[2] * w[4] * c(2, 4) +
           2 * w[3] * w[4] * c(3, 4);
}

/// Global minimum volatility with unrestricted (possibly negative) weights: sqrt(1 / 1'S^-1 1).
inline double analytic_min_vol(const Eigen::MatrixXd& cov) {
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(cov.rows());
    const Eigen::VectorXd x = cov.ldlt().solve(ones);
    return std::sqrt(1.0 / ones.dot(x));
}

/// Index of the lowest vol (first on ties) by plain scan.
inline std::size_t scan_argmin_vol(const std::vector<PortfolioCandidate>& c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i].annual_vol < c[best].annual_vol) best = i;
    return best;
}

/// Index of the highest Sharpe ratio (first on ties) by plain scan.
inline std::size_t scan_argmax_sharpe(const std::vector<PortfolioCandidate>& c) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < c.size(); ++i)
        if (c[i].sharpe > c[best].sharpe) best = i;
    return best;
}

/// Sample ids of all non-dominated candidates by checking every pair, ordered by (vol, -return, id).
inline std::vector<std::size_t> pareto_ids(const std::vector<PortfolioCandidate>& c) {
    std::vector<const PortfolioCandidate*> keep;
    for (std::size_t i = 0; i < c.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < c.size() && !dominated; ++j) {
            if (i == j) continue;
            const bool no_worse = c[j].annual_vol <= c[i].annual_vol && c[j].annual_return >= c[i].annual_return;
            const bool better = c[j].annual_vol < c[i].annual_vol || c[j].annual_return > c[i].annual_return;
            dominated = no_worse && better;
        }
        if (!dominated) keep.push_back(&c[i]);
    }
    for (std::size_t i = 1; i < keep.size(); ++i)
        for (std::size_t j = i; j > 0; --j) {
            const auto* a = keep[j - 1];
            const auto* b = keep[j];
            const bool swap = b->annual_vol < a->annual_vol ||
                              (b->annual_vol == a->annual_vol && b->annual_return > a->annual_return);
            if (!swap) break;
            std::swap(keep[j - 1], keep[j]);
        }
    std::vector<std::size_t> ids;
    for (const auto* k : keep) ids.push_back(k->sample_id);
    return ids;
}

/// Two-asset long-only minimum vol by dense grid search over w in [0, 1].
inline double grid_min_vol_2(const Eigen::MatrixXd& cov, int steps = 200000) {
    double best = INFINITY;
    for (int k = 0; k <= steps; ++k) {
        const double w = static_cast<double>(k) / steps;
        const double v = w * w * cov(0, 0) + (1 - w) * (1 - w) * cov(1, 1) + 2 * w * (1 - w) * cov(0, 1);
        best = std::min(best, std::sqrt(v));
    }
    return best;
}

}  // namespace pfo::oracle

#include "pfo/forecaster/lstm.hpp"

namespace pfo::oracle {

/// One LSTM step with explicit loops, gate blocks read by row offset (i, f, g, o).
inline void loop_cell(const forecast::LstmLayerParams& p, const std::vector<double>& x, std::vector<double>& h,
                      std::vector<double>& c) {
    const auto H = static_cast<std::size_t>(p.U.cols());
    auto pre = [&](std::size_t gate, std::size_t k) {
        const auto row = static_cast<Eigen::Index>(gate * H + k);
        double z = p.b(row, 0);
        for (std::size_t j = 0; j < x.size(); ++j) z += p.W(row, static_cast<Eigen::Index>(j)) * x[j];
        for (std::size_t j = 0; j < H; ++j) z += p.U(row, static_cast<Eigen::Index>(j)) * h[j];
        return z;
    };
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    std::vector<double> h_new(H), c_new(H);
    for (std::size_t k = 0; k < H; ++k) {
        const double i = sig(pre(0, k)), f = sig(pre(1, k)), g = std::tanh(pre(2, k)), o = sig(pre(3, k));
        c_new[k] = f * c[k] + i * g;
        h_new[k] = o * std::tanh(c_new[k]);
    }
    h = h_new;
    c = c_new;
}

/// Inference-mode network output for one window, computed step by step without matrix algebra.
inline double unrolled_forward(const forecast::ModelParams& p, const std::vector<double>& window) {
    std::vector<std::vector<double>> seq;
    for (double v : window) seq.push_back({v});
    for (const auto& layer : p.lstm) {
        const auto H = static_cast<std::size_t>(layer.U.cols());
        std::vector<double> h(H, 0.0), c(H, 0.0);
        std::vector<std::vector<double>> out;
        for (const auto& x : seq) {
            loop_cell(layer, x, h, c);
            out.push_back(h);
        }
        seq = out;
    }
    const auto& last = seq.back();
    double head = p.head.b(0, 0);
    for (Eigen::Index d = 0; d < p.hidden.W.rows(); ++d) {
        double z = p.hidden.b(d, 0);
        for (std::size_t j = 0; j < last.size(); ++j) z += p.hidden.W(d, static_cast<Eigen::Index>(j)) * last[j];
        head += p.head.W(0, d) * std::max(0.0, z);
    }
    return 1.0 / (1.0 + std::exp(-head));
}

struct GradCheck {
    double max_rel_error = 0.0;
    std::string worst;
    std::size_t checked = 0;
};

/// Compare analytic gradients with central differences of the mean Huber loss, parameter by
/// parameter. Relative error is |a - n| / max(|a|, |n|, floor).
inline GradCheck finite_difference_check(const forecast::ModelParams& params, const Eigen::MatrixXd& inputs,
                                         const Eigen::VectorXd& targets, double delta,
                                         const forecast::DropoutMasks* masks, double h = 1e-5,
                                         double floor = 1e-7) {
    const auto analytic = forecast::loss_and_gradient(params, inputs, targets, delta, masks).grad;
    forecast::ModelParams probe = params;
    auto probe_tensors = probe.tensors();
    const auto grad_tensors = analytic.tensors();
    GradCheck out;
    for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
        auto& t = *probe_tensors[k].second;
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            const double orig = t.data()[i];
            t.data()[i] = orig + h;
            const double up = forecast::loss_and_gradient(probe, inputs, targets, delta, masks).loss;
            t.data()[i] = orig - h;
            const double down = forecast::loss_and_gradient(probe, inputs, targets, delta, masks).loss;
            t.data()[i] = orig;
            const double numeric = (up - down) / (2 * h);
            const double a = grad_tensors[k].second->data()[i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            if (rel > out.max_rel_error) {
                out.max_rel_error = rel;
                out.worst = probe_tensors[k].first + "[" + std::to_string(i) + "]";
            }
            ++out.checked;
        }
    }
    return out;
}

}  // namespace pfo::oracle
