#pragma once

#include <filesystem>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pfo/analytics.hpp"
#include "pfo/backtest.hpp"
#include "pfo/error.hpp"
#include "pfo/forecaster/train.hpp"
#include "pfo/ingest.hpp"
#include "pfo/io.hpp"
#include "pfo/optimizer.hpp"

// Text formats exchanged between the CLI subcommands. Floating-point fields use the shortest
// representation that round-trips, so repeated runs are byte-identical.

namespace pfo {

using ojson = nlohmann::ordered_json;

inline std::string stats_csv(std::span<const StockStats> stats) {
    std::string out = "ticker,daily_vol,annual_vol,annual_return\n";
    for (const auto& s : stats) out += fmt::format("{},{},{},{}\n", s.ticker, s.daily_vol, s.annual_vol, s.annual_return);
    return out;
}

/// Square matrix with a ticker header row and a ticker first column.
inline std::string matrix_csv(const CovarianceMatrix& m) {
    std::string out = "ticker";
    for (const auto& t : m.tickers) out += "," + t;
    out += '\n';
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        out += m.tickers[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m.size(); ++j) out += fmt::format(",{}", m.values(i, j));
        out += '\n';
    }
    return out;
}

inline std::string frontier_csv(const FrontierResult& fr, std::span<const std::string> tickers) {
    std::string out = "sample_id,annual_return,annual_vol,sharpe";
    for (const auto& t : tickers) out += ",w_" + t;
    out += '\n';
    for (const auto& c : fr.candidates) {
        out += fmt::format("{},{},{},{}", c.sample_id, c.annual_return, c.annual_vol, c.sharpe);
        for (Eigen::Index i = 0; i < c.weights.size(); ++i) out += fmt::format(",{}", c.weights[i]);
        out += '\n';
    }
    return out;
}

inline ojson portfolio_entry_json(const PortfolioCandidate& c, std::span<const std::string> tickers) {
    ojson weights = ojson::object();
    for (std::size_t i = 0; i < tickers.size(); ++i) weights[tickers[i]] = c.weights[static_cast<Eigen::Index>(i)];
    return {{"weights", std::move(weights)},
            {"annual_return_pct", c.annual_return * 100.0},
            {"annual_risk_pct", c.annual_vol * 100.0},
            {"sharpe", c.sharpe},
            {"sample_id", c.sample_id}};
}

/// Tickers and weights of one portfolio (`min_risk`, `opt_risk` or `equal_weight`) from `optimize` output.
struct PortfolioWeights {
    std::vector<std::string> tickers;
    WeightVector weights;
};

inline PortfolioWeights read_portfolio_weights(const nlohmann::json& j, const std::string& which = "opt_risk") {
    try {
        PortfolioWeights pw;
        pw.tickers = j.at("tickers").get<std::vector<std::string>>();
        const auto& w = j.at(which).at("weights");
        std::vector<double> values;
        for (const auto& t : pw.tickers) values.push_back(w.at(t).get<double>());
        pw.weights = WeightVector(std::span<const double>(values));
        return pw;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("portfolio JSON: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("portfolio JSON: ") + e.what());
    }
}

inline std::string history_csv(const forecast::TrainHistory& h) {
    std::string out = "epoch,train_loss,train_mae,val_loss,val_mae\n";
    for (const auto& e : h.epochs)
        out += fmt::format("{},{},{},{},{}\n", e.epoch, e.train_loss, e.train_mae, e.val_loss, e.val_mae);
    return out;
}

/// Single price per ticker from either `date,ticker,close` or `ticker,date,predicted_close`.
inline PriceMap read_price_points(std::istream& in, const std::string& source = "price file") {
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ": empty file");
    detail::strip_cr(line);
    std::size_t ticker_col, price_col;
    if (line == "date,ticker,close") {
        ticker_col = 1;
        price_col = 2;
    } else if (line == "ticker,date,predicted_close") {
        ticker_col = 0;
        price_col = 2;
    } else {
        throw RowError(1, "unrecognised header '" + line + "'", source);
    }
    PriceMap out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto f = detail::split_commas(line);
        if (f.size() != 3) throw RowError(lineno, "expected 3 fields", source);
        double price = 0.0;
        if (!detail::parse_double(f[price_col], price) || price <= 0.0)
            throw RowError(lineno, "bad price '" + std::string(f[price_col]) + "'", source);
        if (!out.emplace(std::string(f[ticker_col]), price).second)
            throw RowError(lineno, "duplicate ticker " + std::string(f[ticker_col]), source);
    }
    return out;
}

inline PriceMap load_price_points(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    return read_price_points(in, path.string());
}

inline ojson report_to_json(const BacktestReport& r) {
    auto opt = [](const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); };
    ojson rows = ojson::array();
    for (const auto& row : r.rows)
        rows.push_back({{"ticker", row.holding.ticker},
                        {"amount_invested", row.holding.amount_invested},
                        {"entry_price", row.holding.entry_price},
                        {"shares", row.holding.shares},
                        {"actual_price", row.actual_price},
                        {"actual_value", row.actual_value},
                        {"predicted_price", opt(row.predicted_price)},
                        {"predicted_value", opt(row.predicted_value)}});
    return {{"name", r.name},
            {"rows", std::move(rows)},
            {"total_invested", r.total_invested},
            {"total_actual", r.total_actual},
            {"total_predicted", opt(r.total_predicted)},
            {"roi_actual_pct", r.roi_actual_pct},
            {"roi_predicted_pct", opt(r.roi_predicted_pct)}};
}

inline BacktestReport report_from_json(const nlohmann::json& j) {
    auto opt = [](const nlohmann::json& v) {
        return v.is_null() ? std::optional<double>{} : std::optional<double>{v.get<double>()};
    };
    try {
        BacktestReport r;
        r.name = j.at("name").get<std::string>();
        for (const auto& row : j.at("rows")) {
            BacktestRow br;
            br.holding = {row.at("ticker").get<std::string>(), row.at("amount_invested").get<double>(),
                          row.at("entry_price").get<double>(), row.at("shares").get<double>()};
            br.actual_price = row.at("actual_price").get<double>();
            br.actual_value = row.at("actual_value").get<double>();
            br.predicted_price = opt(row.at("predicted_price"));
            br.predicted_value = opt(row.at("predicted_value"));
            r.rows.push_back(std::move(br));
        }
        r.total_invested = j.at("total_invested").get<double>();
        r.total_actual = j.at("total_actual").get<double>();
        r.total_predicted = opt(j.at("total_predicted"));
        r.roi_actual_pct = j.at("roi_actual_pct").get<double>();
        r.roi_predicted_pct = opt(j.at("roi_predicted_pct"));
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("report JSON: ") + e.what());
    }
}

/// Structural check of a backtest report JSON; returns a list of problems (empty when valid).
inline std::vector<std::string> validate_report_json(const nlohmann::json& j) {
    std::vector<std::string> problems;
    auto need = [&](const nlohmann::json& obj, const char* key, auto pred, const char* what) {
        if (!obj.contains(key)) {
            problems.push_back(std::string("missing ") + key);
        } else if (!pred(obj.at(key))) {
            problems.push_back(std::string(key) + " is not " + what);
        }
    };
    auto number = [](const nlohmann::json& v) { return v.is_number(); };
    auto number_or_null = [](const nlohmann::json& v) { return v.is_number() || v.is_null(); };
    if (!j.is_object()) return {"report is not an object"};
    need(j, "name", [](const nlohmann::json& v) { return v.is_string(); }, "a string");
    need(j, "rows", [](const nlohmann::json& v) { return v.is_array() && !v.empty(); }, "a non-empty array");
    for (const char* k : {"total_invested", "total_actual", "roi_actual_pct"}) need(j, k, number, "a number");
    for (const char* k : {"total_predicted", "roi_predicted_pct"}) need(j, k, number_or_null, "a number or null");
    if (j.contains("rows") && j.at("rows").is_array()) {
        double sum_actual = 0.0;
        for (const auto& row : j.at("rows")) {
            need(row, "ticker", [](const nlohmann::json& v) { return v.is_string(); }, "a string");
            for (const char* k : {"amount_invested", "entry_price", "shares", "actual_price", "actual_value"})
                need(row, k, number, "a number");
            for (const char* k : {"predicted_price", "predicted_value"}) need(row, k, number_or_null, "a number or null");
            if (row.contains("actual_value") && row.at("actual_value").is_number())
                sum_actual += row.at("actual_value").get<double>();
        }
        if (problems.empty() && std::abs(sum_actual - j.at("total_actual").get<double>()) > 0.5)
            problems.push_back("total_actual does not equal the sum of row values");
    }
    return problems;
}

inline std::string predicted_csv_header() { return "ticker,date,predicted_close\n"; }

}  // namespace pfo
