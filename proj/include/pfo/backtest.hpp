#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pfo/error.hpp"
#include "pfo/optimizer.hpp"

namespace pfo {

using PriceMap = std::map<std::string, double>;

struct Holding {
    std::string ticker;
    double amount_invested = 0.0;
    double entry_price = 0.0;
    double shares = 0.0;
};

struct BacktestRow {
    Holding holding;
    double actual_price = 0.0;
    double actual_value = 0.0;
    std::optional<double> predicted_price;
    std::optional<double> predicted_value;
};

struct BacktestReport {
    std::string name;
    std::vector<BacktestRow> rows;
    double total_invested = 0.0;
    double total_actual = 0.0;
    std::optional<double> total_predicted;
    double roi_actual_pct = 0.0;
    std::optional<double> roi_predicted_pct;
};

struct SummaryRow {
    std::string portfolio;
    double actual_return_pct = 0.0;
    std::optional<double> predicted_return_pct;
};

namespace detail {
inline double price_of(const PriceMap& prices, const std::string& ticker, const char* what) {
    auto it = prices.find(ticker);
    if (it == prices.end()) throw DataError(std::string(what) + ": no price for " + ticker);
    if (!(it->second > 0.0)) throw InvalidArgument(std::string(what) + ": non-positive price for " + ticker);
    return it->second;
}
}  // namespace detail

/// amount_i = capital * w_i and fractional shares_i = amount_i / price_i.
inline std::vector<Holding> allocate(double capital, std::span<const std::string> tickers, const WeightVector& weights,
                                     const PriceMap& entry_prices) {
    if (!(capital > 0.0)) throw InvalidArgument("allocate: capital must be positive");
    if (static_cast<Eigen::Index>(tickers.size()) != weights.size())
        throw InvalidArgument("allocate: tickers and weights differ in length");
    std::vector<Holding> out;
    out.reserve(tickers.size());
    for (std::size_t i = 0; i < tickers.size(); ++i) {
        const double price = detail::price_of(entry_prices, tickers[i], "allocate");
        const double amount = capital * weights[static_cast<Eigen::Index>(i)];
        out.push_back({tickers[i], amount, price, amount / price});
    }
    return out;
}

/// Sum of shares * price.
inline double value(std::span<const Holding> holdings, const PriceMap& prices) {
    double total = 0.0;
    for (const auto& h : holdings) total += h.shares * detail::price_of(prices, h.ticker, "value");
    return total;
}

inline double roi(double invested, double final_value) {
    if (!(invested > 0.0)) throw InvalidArgument("roi: invested amount must be positive");
    return (final_value - invested) / invested * 100.0;
}

inline BacktestReport run_backtest(double capital, std::span<const std::string> tickers, const WeightVector& weights,
                                   const PriceMap& entry_prices, const PriceMap& actual_prices,
                                   const std::optional<PriceMap>& predicted_prices, std::string name = {}) {
    BacktestReport r;
    r.name = std::move(name);
    const auto holdings = allocate(capital, tickers, weights, entry_prices);
    double predicted_total = 0.0;
    for (const auto& h : holdings) {
        BacktestRow row;
        row.holding = h;
        row.actual_price = detail::price_of(actual_prices, h.ticker, "backtest (actual)");
        row.actual_value = h.shares * row.actual_price;
        if (predicted_prices) {
            row.predicted_price = detail::price_of(*predicted_prices, h.ticker, "backtest (predicted)");
            row.predicted_value = h.shares * *row.predicted_price;
            predicted_total += *row.predicted_value;
        }
        r.total_invested += h.amount_invested;
        r.total_actual += row.actual_value;
        r.rows.push_back(std::move(row));
    }
    r.roi_actual_pct = roi(r.total_invested, r.total_actual);
    if (predicted_prices) {
        r.total_predicted = predicted_total;
        r.roi_predicted_pct = roi(r.total_invested, predicted_total);
    }
    return r;
}

/// One row per report, in input order.
inline std::vector<SummaryRow> summary(std::span<const BacktestReport> reports) {
    if (reports.empty()) throw InvalidArgument("summary: no reports");
    std::vector<SummaryRow> rows;
    rows.reserve(reports.size());
    for (const auto& r : reports) rows.push_back({r.name, r.roi_actual_pct, r.roi_predicted_pct});
    return rows;
}

inline std::string summary_csv(std::span<const SummaryRow> rows) {
    std::string out = "portfolio,actual_return_pct,predicted_return_pct\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{:.2f},", r.portfolio, r.actual_return_pct);
        if (r.predicted_return_pct) out += fmt::format("{:.2f}", *r.predicted_return_pct);
        out += '\n';
    }
    return out;
}

/// Fixed-width table with the allocation/valuation columns; prices and values shown as integers.
inline std::string format_report_table(const BacktestReport& r) {
    std::string out;
    if (!r.name.empty()) out += r.name + "\n";
    out += fmt::format("{:<8}{:>12}{:>11}{:>14}{:>11}{:>11}{:>11}{:>11}\n", "Stock", "Amt Invstd", "Act Price",
                       "No of Stocks", "Act Price", "Act Val", "Pred Price", "Pred Val");
    auto opt_int = [](const std::optional<double>& v) { return v ? fmt::format("{:.0f}", *v) : std::string("-"); };
    for (const auto& row : r.rows) {
        out += fmt::format("{:<8}{:>12.0f}{:>11.0f}{:>14.2f}{:>11.0f}{:>11.0f}{:>11}{:>11}\n", row.holding.ticker,
                           row.holding.amount_invested, row.holding.entry_price, row.holding.shares, row.actual_price,
                           row.actual_value, opt_int(row.predicted_price), opt_int(row.predicted_value));
    }
    out += fmt::format("{:<8}{:>12.0f}{:>11}{:>14}{:>11}{:>11.0f}{:>11}{:>11}\n", "Total", r.total_invested, "", "", "",
                       r.total_actual, "", opt_int(r.total_predicted));
    out += fmt::format("ROI (%)  Actual: {:.2f}", r.roi_actual_pct);
    if (r.roi_predicted_pct) out += fmt::format("  Predicted: {:.2f}", *r.roi_predicted_pct);
    out += '\n';
    return out;
}

}  // namespace pfo
