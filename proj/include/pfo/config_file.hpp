#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pfo/error.hpp"
#include "pfo/run_config.hpp"

// Run configuration file: TOML-style sections of key = value pairs, e.g.
//
//   seed = 7
//   [portfolio]
//   tickers = ["AAA", "BBB"]
//   size = 2
//
// Every key is addressed as "section.key" and may also be overridden on the command line.

namespace pfo {

namespace detail {

using Setter = std::function<void(RunConfig&, const std::vector<std::string>&)>;

/// Rejected value; apply_setting rethrows it as a ConfigError naming the key.
struct BadValue : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline const std::string& single(const std::vector<std::string>& v) {
    if (v.size() != 1) throw BadValue("expected a single value");
    return v.front();
}

template <class T>
T parse_number(const std::string& s) {
    T out{};
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    if (ec != std::errc{} || ptr != end) throw BadValue("invalid number '" + s + "'");
    return out;
}

template <class T, class Member>
Setter number(Member member) {
    return [member](RunConfig& c, const std::vector<std::string>& v) { c.*member = parse_number<T>(single(v)); };
}

inline const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = [] {
        std::map<std::string, Setter> t;
        auto str = [](std::string RunConfig::*m) {
            return Setter([m](RunConfig& c, const std::vector<std::string>& v) { c.*m = single(v); });
        };
        auto date = [](Date RunConfig::*m) {
            return Setter([m](RunConfig& c, const std::vector<std::string>& v) {
                const auto d = try_parse_date(single(v));
                if (!d) throw BadValue("invalid date '" + v.front() + "' (expected YYYY-MM-DD)");
                c.*m = *d;
            });
        };
        auto model_int = [](int forecast::ModelConfig::*m) {
            return Setter([m](RunConfig& c, const std::vector<std::string>& v) {
                c.model.*m = parse_number<int>(single(v));
            });
        };
        auto model_double = [](double forecast::ModelConfig::*m) {
            return Setter([m](RunConfig& c, const std::vector<std::string>& v) {
                c.model.*m = parse_number<double>(single(v));
            });
        };

        t["data.prices"] = str(&RunConfig::prices_path);
        t["data.source"] = str(&RunConfig::source);
        t["data.remote_url"] = str(&RunConfig::remote_url);
        t["data.recorded_dir"] = str(&RunConfig::recorded_dir);
        t["portfolio.name"] = str(&RunConfig::name);
        t["portfolio.tickers"] = [](RunConfig& c, const std::vector<std::string>& v) { c.tickers = v; };
        t["portfolio.size"] = number<int>(&RunConfig::size);
        t["dates.train_start"] = date(&RunConfig::train_start);
        t["dates.train_end"] = date(&RunConfig::train_end);
        t["dates.holdout_start"] = date(&RunConfig::holdout_start);
        t["dates.horizon"] = date(&RunConfig::horizon);
        t["optimizer.samples"] = number<std::size_t>(&RunConfig::samples);
        t["optimizer.risk_free"] = number<double>(&RunConfig::risk_free);
        t["optimizer.threads"] = number<unsigned>(&RunConfig::threads);
        t["optimizer.annual_return"] = [](RunConfig& c, const std::vector<std::string>& v) {
            const auto& s = single(v);
            if (s == "yearly_mean") c.annual_return_method = AnnualReturnMethod::yearly_mean;
            else if (s == "global_mean") c.annual_return_method = AnnualReturnMethod::global_mean;
            else throw BadValue("must be yearly_mean or global_mean");
        };
        t["backtest.capital"] = number<double>(&RunConfig::capital);
        t["backtest.invest_in"] = str(&RunConfig::invest_in);
        t["seed"] = number<std::uint64_t>(&RunConfig::seed);
        t["forecaster.lookback"] = model_int(&forecast::ModelConfig::lookback);
        t["forecaster.lstm_units"] = model_int(&forecast::ModelConfig::lstm_units);
        t["forecaster.lstm_layers"] = model_int(&forecast::ModelConfig::lstm_layers);
        t["forecaster.dropout_rate"] = model_double(&forecast::ModelConfig::dropout_rate);
        t["forecaster.dense_units"] = model_int(&forecast::ModelConfig::dense_units);
        t["forecaster.batch_size"] = model_int(&forecast::ModelConfig::batch_size);
        t["forecaster.epochs"] = model_int(&forecast::ModelConfig::epochs);
        t["forecaster.huber_delta"] = model_double(&forecast::ModelConfig::huber_delta);
        t["forecaster.learning_rate"] = model_double(&forecast::ModelConfig::learning_rate);
        t["forecaster.horizon"] = model_int(&forecast::ModelConfig::horizon);
        t["forecaster.train_fraction"] = model_double(&forecast::ModelConfig::train_fraction);
        return t;
    }();
    return table;
}

}  // namespace detail

/// Set one "section.key" from its textual value(s). Throws ConfigError naming the key.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::vector<std::string>& values) {
    const auto& table = detail::setters();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown setting");
    try {
        it->second(cfg, values);
    } catch (const detail::BadValue& e) {
        throw ConfigError(key, e.what());
    }
}

/// "section.key=value"; list values are comma separated.
inline void apply_override(RunConfig& cfg, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "override must look like section.key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string value = assignment.substr(eq + 1);
    std::vector<std::string> values;
    if (key == "portfolio.tickers") {
        std::stringstream ss(value);
        for (std::string item; std::getline(ss, item, ',');) values.push_back(item);
    } else {
        values.push_back(value);
    }
    apply_setting(cfg, key, values);
}

inline RunConfig parse_run_config(std::istream& in, RunConfig cfg = {}) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw ConfigError("config", e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;  // section markers
        apply_setting(cfg, item.fullname(), item.inputs);
    }
    return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path, RunConfig cfg = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    cfg = parse_run_config(in, std::move(cfg));
    // Data paths in a config file are relative to the file itself.
    const auto base = path.parent_path();
    for (std::string* p : {&cfg.prices_path, &cfg.recorded_dir})
        if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
    return cfg;
}

}  // namespace pfo
