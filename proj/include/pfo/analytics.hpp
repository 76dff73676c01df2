#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfo/date.hpp"
#include "pfo/error.hpp"
#include "pfo/ingest.hpp"

namespace pfo {

/// Trading days per year used for every annualization.
inline constexpr double kTradingDaysPerYear = 250.0;

enum class ReturnKind { simple, log };

/// Daily returns, each aligned to the later of its two price dates.
struct ReturnSeries {
    std::string ticker;
    std::vector<Date> dates;
    std::vector<double> values;
    ReturnKind kind = ReturnKind::simple;
};

/// n x (T-1) daily simple returns on a common date axis.
struct ReturnMatrix {
    std::vector<std::string> tickers;
    std::vector<Date> dates;
    Eigen::MatrixXd values;
};

/// Square covariance-shaped matrix labelled by tickers (also used for correlations).
struct CovarianceMatrix {
    std::vector<std::string> tickers;
    Eigen::MatrixXd values;

    Eigen::Index size() const { return values.rows(); }
};

struct StockStats {
    std::string ticker;
    double daily_vol = 0.0;
    double annual_vol = 0.0;
    double annual_return = 0.0;
};

/// How per-stock annual returns are aggregated from daily returns.
enum class AnnualReturnMethod {
    yearly_mean,  ///< mean daily return x 250 within each calendar year, averaged over years
    global_mean,  ///< mean daily return over the whole span x 250
};

namespace detail {
inline void require_bars(const PriceSeries& p, const char* op) {
    if (p.bars.size() < 2)
        throw InvalidArgument(std::string(op) + ": series " + p.ticker + " needs at least 2 bars");
}

inline double mean(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}
}  // namespace detail

/// close[t+1] / close[t] - 1.
inline ReturnSeries daily_returns(const PriceSeries& prices) {
    detail::require_bars(prices, "daily_returns");
    ReturnSeries r{prices.ticker, {}, {}, ReturnKind::simple};
    r.dates.reserve(prices.size() - 1);
    r.values.reserve(prices.size() - 1);
    for (std::size_t t = 1; t < prices.size(); ++t) {
        r.dates.push_back(prices.bars[t].date);
        r.values.push_back(prices.bars[t].close / prices.bars[t - 1].close - 1.0);
    }
    return r;
}

/// ln(close[t+1] / close[t]).
inline ReturnSeries log_returns(const PriceSeries& prices) {
    detail::require_bars(prices, "log_returns");
    ReturnSeries r{prices.ticker, {}, {}, ReturnKind::log};
    r.dates.reserve(prices.size() - 1);
    r.values.reserve(prices.size() - 1);
    for (std::size_t t = 1; t < prices.size(); ++t) {
        r.dates.push_back(prices.bars[t].date);
        r.values.push_back(std::log(prices.bars[t].close / prices.bars[t - 1].close));
    }
    return r;
}

/// Sample standard deviation (denominator m - 1).
inline double daily_volatility(std::span<const double> returns) {
    if (returns.size() < 2) throw InvalidArgument("daily_volatility: need at least 2 observations");
    const double m = detail::mean(returns);
    double ss = 0.0;
    for (double x : returns) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(returns.size() - 1));
}

inline double daily_volatility(const ReturnSeries& r) { return daily_volatility(r.values); }

inline double annualize_volatility(double daily_vol) {
    if (daily_vol < 0.0 || std::isnan(daily_vol)) throw InvalidArgument("annualize_volatility: negative volatility");
    return daily_vol * std::sqrt(kTradingDaysPerYear);
}

inline double annual_return(const ReturnSeries& r, AnnualReturnMethod method = AnnualReturnMethod::yearly_mean) {
    if (r.values.size() < 2) throw InvalidArgument("annual_return: need at least 2 observations");
    if (r.dates.size() != r.values.size()) throw InvalidArgument("annual_return: dates/values length mismatch");
    if (method == AnnualReturnMethod::global_mean) return detail::mean(r.values) * kTradingDaysPerYear;

    std::map<int, std::pair<double, std::size_t>> by_year;
    for (std::size_t t = 0; t < r.values.size(); ++t) {
        auto& [sum, count] = by_year[r.dates[t].year()];
        sum += r.values[t];
        ++count;
    }
    double total = 0.0;
    for (const auto& [year, acc] : by_year) total += acc.first / static_cast<double>(acc.second) * kTradingDaysPerYear;
    return total / static_cast<double>(by_year.size());
}

inline StockStats stock_stats(const ReturnSeries& r, AnnualReturnMethod method = AnnualReturnMethod::yearly_mean) {
    StockStats s;
    s.ticker = r.ticker;
    s.daily_vol = daily_volatility(r);
    s.annual_vol = annualize_volatility(s.daily_vol);
    s.annual_return = annual_return(r, method);
    return s;
}

/// Simple daily returns of every panel row.
inline ReturnMatrix return_matrix(const AlignedPanel& panel) {
    const auto n = panel.closes.rows();
    const auto T = panel.closes.cols();
    if (T < 2) throw InvalidArgument("return_matrix: panel needs at least 2 dates");
    ReturnMatrix rm;
    rm.tickers = panel.tickers;
    rm.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    rm.values.resize(n, T - 1);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index t = 1; t < T; ++t) rm.values(i, t - 1) = panel.closes(i, t) / panel.closes(i, t - 1) - 1.0;
    return rm;
}

inline ReturnSeries row_series(const ReturnMatrix& rm, Eigen::Index i) {
    ReturnSeries r{rm.tickers.at(static_cast<std::size_t>(i)), rm.dates, {}, ReturnKind::simple};
    r.values.resize(static_cast<std::size_t>(rm.values.cols()));
    for (Eigen::Index t = 0; t < rm.values.cols(); ++t) r.values[static_cast<std::size_t>(t)] = rm.values(i, t);
    return r;
}

/// Sample covariance (denominator m - 1); the lower triangle mirrors the upper one bit-for-bit.
inline CovarianceMatrix covariance_matrix(const ReturnMatrix& rm) {
    const auto n = rm.values.rows();
    const auto m = rm.values.cols();
    if (n < 1) throw InvalidArgument("covariance_matrix: no assets");
    if (m < 2) throw InvalidArgument("covariance_matrix: need at least 2 return observations");
    const Eigen::VectorXd mu = rm.values.rowwise().mean();
    const Eigen::MatrixXd centered = rm.values.colwise() - mu;
    CovarianceMatrix cov{rm.tickers, Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i; j < n; ++j) {
            double s = 0.0;
            for (Eigen::Index t = 0; t < m; ++t) s += centered(i, t) * centered(j, t);
            cov.values(i, j) = cov.values(j, i) = s / static_cast<double>(m - 1);
        }
    return cov;
}

/// Pearson correlation with an exact unit diagonal.
inline CovarianceMatrix correlation_matrix(const ReturnMatrix& rm) {
    const auto cov = covariance_matrix(rm);
    const auto n = cov.size();
    Eigen::VectorXd sd(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(cov.values(i, i) > 0.0))
            throw NumericError("correlation_matrix: zero-variance returns for " +
                               rm.tickers.at(static_cast<std::size_t>(i)));
        sd(i) = std::sqrt(cov.values(i, i));
    }
    CovarianceMatrix corr{cov.tickers, Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        corr.values(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < n; ++j)
            corr.values(i, j) = corr.values(j, i) = cov.values(i, j) / (sd(i) * sd(j));
    }
    return corr;
}

/// Daily covariance scaled to annual units (x 250).
inline CovarianceMatrix annualize_covariance(const CovarianceMatrix& daily) {
    return {daily.tickers, daily.values * kTradingDaysPerYear};
}

}  // namespace pfo
