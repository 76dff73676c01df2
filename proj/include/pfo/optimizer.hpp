#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "pfo/analytics.hpp"
#include "pfo/error.hpp"
#include "pfo/rng.hpp"

namespace pfo {

inline constexpr double kDefaultRiskFree = 0.01;
inline constexpr std::size_t kDefaultSamples = 10000;
inline constexpr double kWeightSumTolerance = 1e-12;

/// Long-only fully-invested weights: each >= 0, sum within 1e-12 of 1.
class WeightVector {
public:
    WeightVector() = default;

    explicit WeightVector(Eigen::VectorXd w) : w_(std::move(w)) {
        if (w_.size() == 0) throw InvalidArgument("weight vector is empty");
        for (Eigen::Index i = 0; i < w_.size(); ++i)
            if (!(w_(i) >= 0.0)) throw InvalidArgument("weight " + std::to_string(i) + " is negative or NaN");
        if (std::abs(w_.sum() - 1.0) > kWeightSumTolerance)
            throw InvalidArgument("weights sum to " + std::to_string(w_.sum()) + ", not 1");
    }

    explicit WeightVector(std::span<const double> w)
        : WeightVector(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())))) {}

    const Eigen::VectorXd& values() const { return w_; }
    Eigen::Index size() const { return w_.size(); }
    double operator[](Eigen::Index i) const { return w_(i); }

    bool operator==(const WeightVector& o) const { return w_.size() == o.w_.size() && w_ == o.w_; }

private:
    Eigen::VectorXd w_;
};

struct PortfolioCandidate {
    std::size_t sample_id = 0;
    WeightVector weights;
    double annual_return = 0.0;
    double annual_vol = 0.0;
    double sharpe = 0.0;

    bool operator==(const PortfolioCandidate&) const = default;
};

struct FrontierResult {
    std::vector<PortfolioCandidate> candidates;
    std::uint64_t seed = 0;
    double risk_free = kDefaultRiskFree;
};

struct FrontierOptions {
    std::size_t samples = kDefaultSamples;
    double risk_free = kDefaultRiskFree;
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

/// Weighted sum of per-stock expected annual returns.
inline double portfolio_return(const WeightVector& w, const Eigen::VectorXd& expected) {
    if (w.size() != expected.size())
        throw InvalidArgument("portfolio_return: " + std::to_string(w.size()) + " weights vs " +
                              std::to_string(expected.size()) + " expected returns");
    return w.values().dot(expected);
}

/// w' * cov * w. `cov` must be square, exactly symmetric and already annualized.
inline double portfolio_variance(const WeightVector& w, const Eigen::MatrixXd& cov) {
    if (cov.rows() != cov.cols() || cov.rows() != w.size())
        throw InvalidArgument("portfolio_variance: dimension mismatch");
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
        for (Eigen::Index j = i + 1; j < cov.cols(); ++j)
            if (cov(i, j) != cov(j, i)) throw InvalidArgument("portfolio_variance: covariance matrix is not symmetric");
    return w.values().dot(cov * w.values());
}

inline double sharpe_ratio(double annual_return, double annual_vol, double risk_free = kDefaultRiskFree) {
    if (!(annual_vol > 0.0)) throw NumericError("sharpe_ratio: volatility must be positive");
    return (annual_return - risk_free) / annual_vol;
}

inline WeightVector equal_weight(std::size_t n) {
    if (n == 0) throw InvalidArgument("equal_weight: n must be at least 1");
    return WeightVector(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

/// n independent uniforms on (0,1) divided by their sum.
inline WeightVector sample_weights(std::size_t n, Engine& rng) {
    if (n == 0) throw InvalidArgument("sample_weights: n must be at least 1");
    Eigen::VectorXd w(static_cast<Eigen::Index>(n));
    double sum = 0.0;
    do {
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = uniform_open01(rng);
        sum = w.sum();
    } while (!(sum > 0.0));
    return WeightVector(Eigen::VectorXd(w / sum));
}

inline PortfolioCandidate evaluate_candidate(std::size_t id, WeightVector w, const Eigen::VectorXd& expected,
                                             const Eigen::MatrixXd& cov, double risk_free) {
    PortfolioCandidate c;
    c.sample_id = id;
    c.annual_return = portfolio_return(w, expected);
    c.annual_vol = std::sqrt(std::max(0.0, portfolio_variance(w, cov)));
    c.sharpe = sharpe_ratio(c.annual_return, c.annual_vol, risk_free);
    c.weights = std::move(w);
    return c;
}

/// Random long-only portfolios; candidate i depends only on (seed, i), so the result is the
/// same for any `threads`.
inline FrontierResult monte_carlo_frontier(const Eigen::VectorXd& expected, const CovarianceMatrix& annual_cov,
                                           const FrontierOptions& opt = {}) {
    const auto n = expected.size();
    if (opt.samples < 1) throw InvalidArgument("monte_carlo_frontier: samples must be at least 1");
    if (n < 1 || annual_cov.values.rows() != n || annual_cov.values.cols() != n)
        throw InvalidArgument("monte_carlo_frontier: dimension mismatch between returns and covariance");

    FrontierResult fr;
    fr.seed = opt.seed;
    fr.risk_free = opt.risk_free;
    fr.candidates.resize(opt.samples);

    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = substream(opt.seed, i);
            fr.candidates[i] = evaluate_candidate(i, sample_weights(static_cast<std::size_t>(n), rng), expected,
                                                  annual_cov.values, opt.risk_free);
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(opt.threads, 1, opt.samples);
    if (workers == 1) {
        work(0, opt.samples);
    } else {
        std::vector<std::jthread> pool;
        std::vector<std::exception_ptr> errors(workers);
        const std::size_t chunk = (opt.samples + workers - 1) / workers;
        for (std::size_t k = 0; k < workers; ++k) {
            const std::size_t b = k * chunk, e = std::min(opt.samples, b + chunk);
            pool.emplace_back([&, b, e, k] {
                try {
                    work(b, e);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            });
        }
        pool.clear();
        for (auto& ep : errors)
            if (ep) std::rethrow_exception(ep);
    }
    return fr;
}

/// Lowest annual_vol; the earliest sample wins ties.
inline const PortfolioCandidate& min_risk_portfolio(const FrontierResult& fr) {
    if (fr.candidates.empty()) throw InvalidArgument("min_risk_portfolio: no candidates");
    const PortfolioCandidate* best = &fr.candidates.front();
    for (const auto& c : fr.candidates)
        if (c.annual_vol < best->annual_vol) best = &c;
    return *best;
}

/// Highest Sharpe ratio; the earliest sample wins ties.
inline const PortfolioCandidate& max_sharpe_portfolio(const FrontierResult& fr) {
    if (fr.candidates.empty()) throw InvalidArgument("max_sharpe_portfolio: no candidates");
    const PortfolioCandidate* best = &fr.candidates.front();
    for (const auto& c : fr.candidates)
        if (c.sharpe > best->sharpe) best = &c;
    return *best;
}

/// Pareto-optimal candidates under (min vol, max return), ascending vol.
/// Exact duplicates do not dominate each other and are all kept.
inline std::vector<PortfolioCandidate> efficient_frontier(const FrontierResult& fr) {
    if (fr.candidates.empty()) throw InvalidArgument("efficient_frontier: no candidates");
    std::vector<std::size_t> idx(fr.candidates.size());
    std::iota(idx.begin(), idx.end(), 0);
    const auto& c = fr.candidates;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (c[a].annual_vol != c[b].annual_vol) return c[a].annual_vol < c[b].annual_vol;
        return c[a].annual_return > c[b].annual_return;
    });

    std::vector<PortfolioCandidate> out;
    bool have_prev = false;
    double best_lower_vol_return = 0.0;
    for (std::size_t g = 0; g < idx.size();) {
        std::size_t h = g;
        while (h < idx.size() && c[idx[h]].annual_vol == c[idx[g]].annual_vol) ++h;
        const double group_max = c[idx[g]].annual_return;
        if (!have_prev || group_max > best_lower_vol_return) {
            for (std::size_t k = g; k < h && c[idx[k]].annual_return == group_max; ++k) out.push_back(c[idx[k]]);
            best_lower_vol_return = group_max;
            have_prev = true;
        }
        g = h;
    }
    return out;
}

}  // namespace pfo
