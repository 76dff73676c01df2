#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "pfo/analytics.hpp"
#include "pfo/date.hpp"
#include "pfo/error.hpp"
#include "pfo/forecaster/config.hpp"
#include "pfo/io.hpp"
#include "pfo/optimizer.hpp"

namespace pfo {

/// Everything a pipeline run depends on besides the price data itself.
struct RunConfig {
    // [data]
    std::string prices_path;          ///< long-format price CSV read by `ingest` when source = csv
    std::string source = "csv";       ///< csv | remote | recorded
    std::string remote_url = "https://query1.finance.yahoo.com";
    std::string recorded_dir;         ///< directory of recorded responses when source = recorded

    // [portfolio]
    std::string name = "portfolio";
    std::vector<std::string> tickers;
    int size = 5;

    // [dates]
    Date train_start{2016, 1, 1};
    Date train_end{2020, 12, 31};
    Date holdout_start{2021, 1, 1};
    Date horizon{2021, 6, 1};

    // [optimizer]
    std::size_t samples = kDefaultSamples;
    double risk_free = kDefaultRiskFree;
    unsigned threads = 1;
    AnnualReturnMethod annual_return_method = AnnualReturnMethod::yearly_mean;

    // [backtest]
    double capital = 100000.0;
    std::string invest_in = "opt_risk";  ///< opt_risk | min_risk | equal_weight

    std::uint64_t seed = 42;
    forecast::ModelConfig model;

    void validate() const {
        if (source != "csv" && source != "remote" && source != "recorded")
            throw ConfigError("data.source", "must be csv, remote or recorded");
        if (source == "csv" && prices_path.empty()) throw ConfigError("data.prices", "required when data.source = csv");
        if (source == "recorded" && recorded_dir.empty())
            throw ConfigError("data.recorded_dir", "required when data.source = recorded");
        if (size < 1) throw ConfigError("portfolio.size", "must be at least 1");
        if (static_cast<int>(tickers.size()) != size)
            throw ConfigError("portfolio.tickers", fmt::format("expected {} tickers, got {}", size, tickers.size()));
        std::set<std::string> uniq(tickers.begin(), tickers.end());
        if (uniq.size() != tickers.size()) throw ConfigError("portfolio.tickers", "tickers must be distinct");
        if (!(train_start < train_end)) throw ConfigError("dates.train_end", "must be after dates.train_start");
        if (!(train_end < holdout_start)) throw ConfigError("dates.holdout_start", "must be after the training range");
        if (!(holdout_start < horizon)) throw ConfigError("dates.horizon", "must be after dates.holdout_start");
        if (samples < 1) throw ConfigError("optimizer.samples", "must be at least 1");
        if (threads < 1) throw ConfigError("optimizer.threads", "must be at least 1");
        if (!(capital > 0.0)) throw ConfigError("backtest.capital", "must be positive");
        if (invest_in != "opt_risk" && invest_in != "min_risk" && invest_in != "equal_weight")
            throw ConfigError("backtest.invest_in", "must be opt_risk, min_risk or equal_weight");
        try {
            model.validate();
        } catch (const ConfigError& e) {
            throw ConfigError("forecaster." + e.field(), std::string(e.what()).substr(e.field().size() + 2));
        }
    }

    /// Stable key=value rendering of every field; its hash identifies the run.
    std::string canonical() const {
        std::string s;
        auto kv = [&](const char* k, const auto& v) { s += fmt::format("{}={}\n", k, v); };
        kv("data.prices", prices_path);
        kv("data.source", source);
        kv("data.remote_url", remote_url);
        kv("data.recorded_dir", recorded_dir);
        kv("portfolio.name", name);
        kv("portfolio.tickers", fmt::format("{}", fmt::join(tickers, ",")));
        kv("portfolio.size", size);
        kv("dates.train_start", train_start.iso());
        kv("dates.train_end", train_end.iso());
        kv("dates.holdout_start", holdout_start.iso());
        kv("dates.horizon", horizon.iso());
        kv("optimizer.samples", samples);
        kv("optimizer.risk_free", risk_free);
        kv("optimizer.annual_return", annual_return_method == AnnualReturnMethod::yearly_mean ? "yearly_mean"
                                                                                              : "global_mean");
        kv("backtest.capital", capital);
        kv("backtest.invest_in", invest_in);
        kv("seed", seed);
        kv("forecaster.lookback", model.lookback);
        kv("forecaster.lstm_units", model.lstm_units);
        kv("forecaster.lstm_layers", model.lstm_layers);
        kv("forecaster.dropout_rate", model.dropout_rate);
        kv("forecaster.dense_units", model.dense_units);
        kv("forecaster.batch_size", model.batch_size);
        kv("forecaster.epochs", model.epochs);
        kv("forecaster.huber_delta", model.huber_delta);
        kv("forecaster.learning_rate", model.learning_rate);
        kv("forecaster.horizon", model.horizon);
        kv("forecaster.train_fraction", model.train_fraction);
        return s;
    }

    std::string hash() const { return hex64(fnv1a64(canonical())); }
};

}  // namespace pfo
